//! The nine recipe genres and their fixed integer labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GENRE_COUNT: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Genre {
    Bakery = 1,
    Drinks = 2,
    NonVeg = 3,
    Vegetables = 4,
    FastFood = 5,
    Cereal = 6,
    Meal = 7,
    Sides = 8,
    Fusion = 9,
}

impl Genre {
    pub const ALL: [Genre; GENRE_COUNT] = [
        Genre::Bakery,
        Genre::Drinks,
        Genre::NonVeg,
        Genre::Vegetables,
        Genre::FastFood,
        Genre::Cereal,
        Genre::Meal,
        Genre::Sides,
        Genre::Fusion,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Zero-based position, for indexing per-genre arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_id(id: u8) -> Result<Genre> {
        match id {
            1..=9 => Ok(Genre::ALL[id as usize - 1]),
            _ => Err(Error::validation(format!("genre id {id} outside 1..9"))),
        }
    }

    pub fn from_index(idx: usize) -> Genre {
        Genre::ALL[idx]
    }

    pub fn name(self) -> &'static str {
        match self {
            Genre::Bakery => "Bakery",
            Genre::Drinks => "Drinks",
            Genre::NonVeg => "NonVeg",
            Genre::Vegetables => "Vegetables",
            Genre::FastFood => "FastFood",
            Genre::Cereal => "Cereal",
            Genre::Meal => "Meal",
            Genre::Sides => "Sides",
            Genre::Fusion => "Fusion",
        }
    }

    /// Lowercase spelling used in the corpus `genre` column.
    pub fn slug(self) -> &'static str {
        match self {
            Genre::Bakery => "bakery",
            Genre::Drinks => "drinks",
            Genre::NonVeg => "nonveg",
            Genre::Vegetables => "vegetables",
            Genre::FastFood => "fastfood",
            Genre::Cereal => "cereal",
            Genre::Meal => "meal",
            Genre::Sides => "sides",
            Genre::Fusion => "fusion",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Genre {
    type Err = Error;

    /// Accepts names case-insensitively, ignoring spaces, hyphens and
    /// underscores ("Fast Food", "non-veg", "NonVeg"), or a bare id.
    fn from_str(s: &str) -> Result<Genre> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        if let Ok(id) = key.parse::<u8>() {
            return Genre::from_id(id);
        }
        let genre = match key.as_str() {
            "bakery" => Genre::Bakery,
            "drinks" | "drink" => Genre::Drinks,
            "nonveg" => Genre::NonVeg,
            "vegetables" | "vegetable" => Genre::Vegetables,
            "fastfood" => Genre::FastFood,
            "cereal" | "cereals" => Genre::Cereal,
            "meal" | "meals" => Genre::Meal,
            "sides" | "side" => Genre::Sides,
            "fusion" | "fusions" => Genre::Fusion,
            _ => return Err(Error::validation(format!("unknown genre name {s:?}"))),
        };
        Ok(genre)
    }
}

impl TryFrom<u8> for Genre {
    type Error = Error;

    fn try_from(id: u8) -> Result<Genre> {
        Genre::from_id(id)
    }
}

impl From<Genre> for u8 {
    fn from(g: Genre) -> u8 {
        g.id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_table_order() {
        let names: Vec<_> = Genre::ALL.iter().map(|g| (g.id(), g.name())).collect();
        assert_eq!(
            names,
            vec![
                (1, "Bakery"),
                (2, "Drinks"),
                (3, "NonVeg"),
                (4, "Vegetables"),
                (5, "FastFood"),
                (6, "Cereal"),
                (7, "Meal"),
                (8, "Sides"),
                (9, "Fusion"),
            ]
        );
    }

    #[test]
    fn id_name_bijection() {
        for g in Genre::ALL {
            assert_eq!(Genre::from_id(g.id()).unwrap(), g);
            assert_eq!(g.name().parse::<Genre>().unwrap(), g);
            assert_eq!(g.slug().parse::<Genre>().unwrap(), g);
            assert_eq!(Genre::from_index(g.index()), g);
        }
        assert!(Genre::from_id(0).is_err());
        assert!(Genre::from_id(10).is_err());
    }

    #[test]
    fn lenient_names() {
        assert_eq!("Fast Food".parse::<Genre>().unwrap(), Genre::FastFood);
        assert_eq!("non-veg".parse::<Genre>().unwrap(), Genre::NonVeg);
        assert_eq!("cereals".parse::<Genre>().unwrap(), Genre::Cereal);
        assert!("dessert".parse::<Genre>().is_err());
    }
}
