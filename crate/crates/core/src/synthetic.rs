//! Seeded synthetic recipe corpora with known genres.
//!
//! Each genre owns a keyword pool; every sampled word is drawn from the
//! record's own pool with probability `mixing`, otherwise from a shared noise
//! pool. Titles, ingredient lists and directions are all built this way, so
//! the label is recoverable from any field in proportion to `mixing`.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Provenance, RecipeRecord};
use crate::error::{Error, Result};
use crate::genre::{Genre, GENRE_COUNT};
use crate::rng::{stream, Domain};

pub const DEFAULT_SEED: u64 = 2023;

const KEYWORDS: [&[&str]; GENRE_COUNT] = [
    &[
        "muffin",
        "croissant",
        "scone",
        "brioche",
        "sourdough",
        "baguette",
        "crumpet",
        "pastry",
        "shortbread",
        "strudel",
        "focaccia",
        "yeast",
        "flour",
        "icing",
    ],
    &[
        "smoothie",
        "lemonade",
        "espresso",
        "mojito",
        "latte",
        "punch",
        "cider",
        "milkshake",
        "sangria",
        "kombucha",
        "cordial",
        "chai",
        "soda",
        "tonic",
    ],
    &[
        "chicken",
        "beef",
        "pork",
        "lamb",
        "salmon",
        "shrimp",
        "bacon",
        "turkey",
        "brisket",
        "sausage",
        "venison",
        "anchovy",
        "mutton",
        "drumstick",
    ],
    &[
        "zucchini",
        "eggplant",
        "spinach",
        "broccoli",
        "cauliflower",
        "kale",
        "asparagus",
        "okra",
        "beetroot",
        "artichoke",
        "leek",
        "chard",
        "radish",
        "squash",
    ],
    &[
        "burger",
        "hotdog",
        "nachos",
        "fries",
        "pizza",
        "taco",
        "burrito",
        "quesadilla",
        "slider",
        "corndog",
        "wrap",
        "nugget",
        "pretzel",
        "ketchup",
    ],
    &[
        "oatmeal",
        "granola",
        "muesli",
        "cornflakes",
        "porridge",
        "bran",
        "quinoa",
        "millet",
        "barley",
        "buckwheat",
        "farro",
        "amaranth",
        "spelt",
        "sorghum",
    ],
    &[
        "casserole",
        "stew",
        "lasagna",
        "risotto",
        "curry",
        "goulash",
        "chili",
        "paella",
        "jambalaya",
        "ragout",
        "meatloaf",
        "potpie",
        "biryani",
        "moussaka",
    ],
    &[
        "coleslaw",
        "hummus",
        "guacamole",
        "salsa",
        "relish",
        "chutney",
        "dip",
        "pickle",
        "tzatziki",
        "pesto",
        "aioli",
        "gravy",
        "croutons",
        "slaw",
    ],
    &[
        "kimchi",
        "sushi",
        "bibimbap",
        "ramen",
        "teriyaki",
        "bulgogi",
        "tikka",
        "bao",
        "poke",
        "banh",
        "gochujang",
        "miso",
        "wasabi",
        "tempura",
    ],
];

const NOISE: &[&str] = &[
    "easy", "quick", "homemade", "classic", "best", "simple", "family", "favorite", "special", "grandma", "sunday",
    "healthy", "golden", "rustic", "sweet", "savory", "fresh", "perfect", "holiday", "summer", "winter", "salt",
    "pepper", "butter", "sugar", "water", "oil", "garlic", "onion", "egg", "milk", "vanilla",
];

const MIX_VERBS: [&str; 6] = ["Mix", "Stir", "Add", "Beat", "Combine", "Fold"];
const HEAT_VERBS: [&str; 3] = ["Bake", "Cook", "Heat"];
const TEMPERATURES: [u32; 6] = [325, 350, 375, 400, 425, 450];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub per_genre: usize,
    /// One pool per genre, in genre id order.
    pub keywords: Vec<Vec<String>>,
    pub noise: Vec<String>,
    /// Probability that a sampled word comes from the record's own pool.
    pub mixing: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            per_genre: 100,
            keywords: KEYWORDS
                .iter()
                .map(|p| p.iter().map(|w| w.to_string()).collect())
                .collect(),
            noise: NOISE.iter().map(|w| w.to_string()).collect(),
            mixing: 0.7,
            seed: DEFAULT_SEED,
        }
    }
}

fn check_word(w: &str) -> Result<()> {
    if w.is_empty() || !w.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) {
        return Err(Error::validation(format!(
            "synthetic pool word {w:?} must be a single lowercase alphanumeric token"
        )));
    }
    Ok(())
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_genre == 0 {
            return Err(Error::validation("per-genre count must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::validation(format!("mixing rate {} outside [0, 1]", self.mixing)));
        }
        if self.keywords.len() != GENRE_COUNT {
            return Err(Error::validation(format!(
                "need {GENRE_COUNT} keyword pools, got {}",
                self.keywords.len()
            )));
        }
        if self.mixing < 1.0 && self.noise.is_empty() {
            return Err(Error::validation("noise pool is empty but mixing rate is below 1"));
        }
        let mut owner: BTreeMap<&str, String> = BTreeMap::new();
        for (g, pool) in self.keywords.iter().enumerate() {
            let name = Genre::from_index(g).name();
            if pool.is_empty() {
                return Err(Error::validation(format!("keyword pool for {name} is empty")));
            }
            for w in pool {
                check_word(w)?;
                if let Some(prev) = owner.insert(w, name.to_owned()) {
                    if prev != name {
                        return Err(Error::validation(format!(
                            "keyword {w:?} appears in both the {prev} and {name} pools"
                        )));
                    }
                }
            }
        }
        for w in &self.noise {
            check_word(w)?;
            if let Some(g) = owner.get(w.as_str()) {
                return Err(Error::validation(format!("noise word {w:?} is also a {g} keyword")));
            }
        }
        Ok(())
    }
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    own: &'a [String],
    noise: &'a [String],
    mixing: f64,
}

impl Sampler<'_> {
    fn word(&mut self) -> String {
        let pool = if self.noise.is_empty() || self.rng.random_bool(self.mixing) {
            self.own
        } else {
            self.noise
        };
        pool.choose(&mut self.rng).expect("validated non-empty pool").clone()
    }

    fn pick<'b>(&mut self, items: &'b [&'b str]) -> &'b str {
        items.choose(&mut self.rng).expect("non-empty")
    }

    fn pick_temp(&mut self) -> u32 {
        *TEMPERATURES.choose(&mut self.rng).expect("non-empty")
    }

    fn range(&mut self, lo: u32, hi: u32) -> u32 {
        self.rng.random_range(lo..=hi)
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

fn make_record(id: u64, genre: Genre, s: &mut Sampler<'_>) -> RecipeRecord {
    let title_len = s.range(2, 4);
    let title: Vec<String> = (0..title_len).map(|_| capitalize(&s.word())).collect();

    let mut ner: Vec<String> = Vec::new();
    for _ in 0..s.range(3, 6) {
        let w = s.word();
        if !ner.contains(&w) {
            ner.push(w);
        }
    }

    let mut directions = Vec::new();
    let mix = s.pick(&MIX_VERBS);
    directions.push(format!("{mix} the {} with the {}.", s.word(), s.word()));
    if s.rng.random_bool(0.5) {
        directions.push(format!("Add {} and stir until smooth.", s.word()));
    }
    let (a, b) = (s.range(8, 12), s.range(9, 13));
    directions.push(format!(
        "Pour into a {a}x{b} pan sprayed with {}.",
        capitalize(&s.word())
    ));
    let heat = s.pick(&HEAT_VERBS);
    let t = s.pick_temp();
    let lo = s.range(10, 40);
    let hi = lo + s.range(2, 15);
    directions.push(format!("{heat} at {t}\u{b0} for {lo} to {hi} minutes."));
    if s.rng.random_bool(0.3) {
        directions.push(format!("Serve with {}.", s.word()));
    } else {
        directions.push("Refrigerate overnight.".to_owned());
    }

    RecipeRecord {
        id,
        title: title.join(" "),
        directions,
        ner,
        extended_ner: None,
        genre: Some(genre),
        provenance: Provenance::Human,
    }
}

/// Records are numbered from 1, genre by genre. Each record draws from its
/// own random stream, so changing `per_genre` keeps earlier records intact.
pub fn generate(spec: &SyntheticCorpusSpec) -> Result<Vec<RecipeRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.per_genre * GENRE_COUNT);
    for genre in Genre::ALL {
        for k in 0..spec.per_genre {
            let index = (genre.index() as u64) << 32 | k as u64;
            let mut s = Sampler {
                rng: stream(spec.seed, Domain::Synthetic, index),
                own: &spec.keywords[genre.index()],
                noise: &spec.noise,
                mixing: spec.mixing,
            };
            let id = out.len() as u64 + 1;
            out.push(make_record(id, genre, &mut s));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_stats, write_canonical_to};

    #[test]
    fn default_spec_sizes() {
        let recs = generate(&SyntheticCorpusSpec::default()).unwrap();
        assert_eq!(recs.len(), 900);
        let stats = corpus_stats(&recs);
        for g in Genre::ALL {
            assert_eq!(stats.genre(g).total, 100);
        }
        assert!(recs
            .iter()
            .all(|r| r.provenance == Provenance::Human && r.validate().is_ok()));
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SyntheticCorpusSpec {
            per_genre: 7,
            ..Default::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_canonical_to(&mut a, &generate(&spec).unwrap()).unwrap();
        write_canonical_to(&mut b, &generate(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = SyntheticCorpusSpec { seed: 9, ..spec };
        let mut c = Vec::new();
        write_canonical_to(&mut c, &generate(&other).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn overlapping_pools_rejected() {
        let mut spec = SyntheticCorpusSpec::default();
        spec.keywords[3].push("muffin".into());
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("Bakery") && err.contains("Vegetables"), "{err}");

        let mut spec = SyntheticCorpusSpec::default();
        spec.noise.push("sushi".into());
        assert!(spec.validate().is_err());

        assert!(SyntheticCorpusSpec {
            per_genre: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SyntheticCorpusSpec {
            mixing: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn pure_keywords_stay_in_pool() {
        let spec = SyntheticCorpusSpec {
            per_genre: 5,
            mixing: 1.0,
            ..Default::default()
        };
        for r in generate(&spec).unwrap() {
            let pool = &spec.keywords[r.genre.unwrap().index()];
            for w in r.title.split(' ') {
                assert!(pool.contains(&w.to_lowercase()), "{w}");
            }
            assert!(r.ner.iter().all(|w| pool.contains(w)));
        }
    }
}
