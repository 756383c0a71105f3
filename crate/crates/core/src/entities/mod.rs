//! Extended entity lists for recipes.
//!
//! Two independent extractors run over the joined directions of a recipe: a
//! token pattern grammar ([`PatternExtractor`]) that finds temperatures,
//! durations, pan sizes, process verbs and capitalized brand or equipment
//! names, and a corpus-derived [`Gazetteer`] matcher that finds ingredient
//! mentions. Their outputs are unioned with the recipe's source entity list
//! into a duplicate-free [`EntitySet`].

mod gazetteer;
mod lexer;
mod pattern;
mod set;

pub use gazetteer::{extract_gazetteer, Gazetteer};
pub use pattern::{extract_pattern, PatternExtractor, DEFAULT_PROCESS_VERBS};
pub use set::{Category, Entity, EntitySet};

use rayon::prelude::*;

use crate::corpus::RecipeRecord;

/// Literal escape sequences for the degree sign as they appear in scraped
/// corpus text, longest first.
pub(crate) const DEGREE_ESCAPES: [&str; 2] = ["\\\\u00b0", "\\u00b0"];

pub(crate) fn replace_degree_escapes(text: &str) -> std::borrow::Cow<'_, str> {
    if !text.contains("\\u00b0") {
        return std::borrow::Cow::Borrowed(text);
    }
    let mut out = text.to_owned();
    for esc in DEGREE_ESCAPES {
        out = out.replace(esc, "°");
    }
    std::borrow::Cow::Owned(out)
}

/// Canonical text for an entity surface.
///
/// Hyphens and punctuation are dropped (letters, digits, whitespace and the
/// degree sign survive), runs of whitespace collapse to one space, and the
/// escaped degree sequence becomes `°`. Casing is preserved; comparison keys
/// are the lowercased result (see [`entity_key`]). An empty result means the
/// surface carried no usable text.
pub fn normalize_entity(surface: &str) -> String {
    let text = replace_degree_escapes(surface);
    let kept: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace() || *c == '°')
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-insensitive set key for a normalized entity.
pub fn entity_key(normalized: &str) -> String {
    normalized.to_lowercase()
}

/// Union of the source list with two extracted sets. On a key collision the
/// first inserted surface wins; insertion order is `source_ner`, then `a`,
/// then `b`.
pub fn merge_entities(source_ner: &[String], a: &EntitySet, b: &EntitySet) -> EntitySet {
    let mut out = EntitySet::new();
    for surface in source_ner {
        if let Some(e) = Entity::new(surface, Category::Ingredient) {
            out.insert(e);
        }
    }
    for e in a.iter().chain(b.iter()) {
        out.insert(e.clone());
    }
    out
}

/// Runs both extractors over a record and merges with its source list.
#[derive(Debug, Clone)]
pub struct Extender {
    pattern: PatternExtractor,
    gazetteer: Gazetteer,
}

impl Extender {
    pub fn new(pattern: PatternExtractor, gazetteer: Gazetteer) -> Self {
        Extender { pattern, gazetteer }
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn extended_entities(&self, record: &RecipeRecord) -> EntitySet {
        let text = record.directions.join(" ");
        let a = self.pattern.extract(&text);
        let b = self.gazetteer.extract(&text);
        merge_entities(&record.ner, &a, &b)
    }

    pub fn extend_record(&self, record: &RecipeRecord) -> RecipeRecord {
        let mut out = record.clone();
        out.extended_ner = Some(self.extended_entities(record));
        out
    }

    /// Extends every record. Work is spread over the rayon pool; output order
    /// matches input order.
    pub fn extend_corpus(&self, records: &[RecipeRecord]) -> Vec<RecipeRecord> {
        records.par_iter().map(|r| self.extend_record(r)).collect()
    }
}

/// Fills `extended_ner` for every record using the default verb lexicon.
pub fn extend_corpus(records: &[RecipeRecord], gazetteer: &Gazetteer) -> Vec<RecipeRecord> {
    Extender::new(PatternExtractor::default(), gazetteer.clone()).extend_corpus(records)
}
