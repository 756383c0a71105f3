use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{entity_key, normalize_entity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Ingredient,
    Process,
    Temperature,
    Duration,
    Quantity,
    Equipment,
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Ingredient => "ingredient",
            Category::Process => "process",
            Category::Temperature => "temperature",
            Category::Duration => "duration",
            Category::Quantity => "quantity",
            Category::Equipment => "equipment",
            Category::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Some(match s {
            "ingredient" => Category::Ingredient,
            "process" => Category::Process,
            "temperature" => Category::Temperature,
            "duration" => Category::Duration,
            "quantity" => Category::Quantity,
            "equipment" => Category::Equipment,
            "other" => Category::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub normalized: String,
    pub category: Category,
}

impl Entity {
    /// `None` when the surface normalizes to nothing.
    pub fn new(surface: &str, category: Category) -> Option<Entity> {
        let normalized = normalize_entity(surface);
        if normalized.is_empty() {
            return None;
        }
        Some(Entity {
            surface: surface.to_owned(),
            normalized,
            category,
        })
    }

    pub fn key(&self) -> String {
        entity_key(&self.normalized)
    }
}

/// Insertion-ordered entity collection with at most one member per
/// lowercased normalized key.
#[derive(Debug, Clone, Default)]
pub struct EntitySet {
    entities: Vec<Entity>,
    index: HashMap<String, usize>,
}

impl EntitySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless the key is already present. Returns whether it was added.
    pub fn insert(&mut self, entity: Entity) -> bool {
        let key = entity.key();
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.entities.len());
        self.entities.push(entity);
        true
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.index.contains_key(&entity_key(key))
    }

    pub fn get(&self, key: &str) -> Option<&Entity> {
        self.index.get(&entity_key(key)).map(|&i| &self.entities[i])
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Entity> {
        self.entities.iter()
    }

    /// Lowercased normalized keys in insertion order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| {
            let (k, _) = self
                .index
                .get_key_value(&entity_key(&e.normalized))
                .expect("index covers every entity");
            k.as_str()
        })
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.surface.as_str())
    }
}

impl PartialEq for EntitySet {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
    }
}

impl Eq for EntitySet {}

impl FromIterator<Entity> for EntitySet {
    fn from_iter<I: IntoIterator<Item = Entity>>(iter: I) -> Self {
        let mut set = EntitySet::new();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

impl<'a> IntoIterator for &'a EntitySet {
    type Item = &'a Entity;
    type IntoIter = std::slice::Iter<'a, Entity>;

    fn into_iter(self) -> Self::IntoIter {
        self.entities.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_case_insensitive() {
        let mut s = EntitySet::new();
        assert!(s.insert(Entity::new("Cool Whip", Category::Equipment).unwrap()));
        assert!(!s.insert(Entity::new("cool whip", Category::Other).unwrap()));
        assert!(s.contains_key("COOL WHIP"));
        assert_eq!(s.get("cool whip").unwrap().surface, "Cool Whip");
        assert_eq!(s.keys().collect::<Vec<_>>(), vec!["cool whip"]);
    }

    #[test]
    fn empty_surface_rejected() {
        assert!(Entity::new(" - ", Category::Other).is_none());
    }
}
