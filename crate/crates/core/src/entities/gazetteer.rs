//! Corpus-derived ingredient lexicon and longest-match scanner.

use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Token};
use super::{entity_key, normalize_entity, Category, Entity, EntitySet};
use crate::corpus::RecipeRecord;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    terms: BTreeMap<String, usize>,
    max_words: usize,
}

impl Gazetteer {
    /// Every normalized source entity becomes a key; its frequency is the
    /// number of records listing it.
    pub fn build(records: &[RecipeRecord]) -> Gazetteer {
        let mut terms: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            let keys: BTreeSet<String> = r
                .ner
                .iter()
                .map(|s| entity_key(&normalize_entity(s)))
                .filter(|k| !k.is_empty())
                .collect();
            for k in keys {
                *terms.entry(k).or_default() += 1;
            }
        }
        Gazetteer::from_terms(terms)
    }

    pub fn from_terms(terms: BTreeMap<String, usize>) -> Gazetteer {
        let max_words = terms.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);
        Gazetteer { terms, max_words }
    }

    pub fn frequency(&self, term: &str) -> Option<usize> {
        self.terms.get(&entity_key(&normalize_entity(term))).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, usize)> {
        self.terms.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Longest-match-first scan. Matches stay within one sentence and never
    /// cross punctuation. Each matched term is emitted once as an
    /// ingredient; a match directly preceded by a number also yields a
    /// quantity span ("1 egg").
    pub fn extract(&self, text: &str) -> EntitySet {
        let mut out = EntitySet::new();
        if self.terms.is_empty() {
            return out;
        }
        let tokens = lex(text);
        let keys: Vec<String> = tokens.iter().map(|t| entity_key(&normalize_entity(t.text))).collect();

        let mut i = 0;
        while i < tokens.len() {
            match self.longest_match(&tokens, &keys, i) {
                Some(end) => {
                    let surface = &text[tokens[i].start..tokens[end].end];
                    if let Some(e) = Entity::new(surface, Category::Ingredient) {
                        out.insert(e);
                    }
                    if i > 0 && tokens[i].joined && is_quantity(tokens[i - 1].text) {
                        let span = &text[tokens[i - 1].start..tokens[end].end];
                        if let Some(e) = Entity::new(span, Category::Quantity) {
                            out.insert(e);
                        }
                    }
                    i = end + 1;
                }
                None => i += 1,
            }
        }
        out
    }

    fn longest_match(&self, tokens: &[Token<'_>], keys: &[String], i: usize) -> Option<usize> {
        if keys[i].is_empty() {
            return None;
        }
        let mut limit = i;
        while limit + 1 < tokens.len()
            && limit + 1 - i < self.max_words
            && tokens[limit + 1].joined
            && tokens[limit + 1].sentence == tokens[i].sentence
            && !keys[limit + 1].is_empty()
        {
            limit += 1;
        }
        (i..=limit).rev().find(|&end| {
            let candidate = keys[i..=end].join(" ");
            self.terms.contains_key(&candidate)
        })
    }
}

fn is_quantity(word: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match word.split_once('/') {
        Some((a, b)) => digits(a) && digits(b),
        None => digits(word),
    }
}

pub fn extract_gazetteer(direction: &str, gazetteer: &Gazetteer) -> EntitySet {
    gazetteer.extract(direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, RecipeRecord};

    fn gaz(terms: &[&str]) -> Gazetteer {
        Gazetteer::from_terms(terms.iter().map(|t| (t.to_string(), 1)).collect())
    }

    fn record(id: u64, ner: &[&str]) -> RecipeRecord {
        RecipeRecord {
            id,
            title: "t".into(),
            directions: vec!["d".into()],
            ner: ner.iter().map(|s| s.to_string()).collect(),
            extended_ner: None,
            genre: None,
            provenance: Provenance::Unlabeled,
        }
    }

    #[test]
    fn build_counts_records() {
        let g = Gazetteer::build(&[record(0, &["sugar", "Sugar"]), record(1, &["sugar"])]);
        assert_eq!(g.frequency("sugar"), Some(2));
        assert_eq!(g.len(), 1);

        let g = Gazetteer::build(&[record(0, &["butter", "flour"])]);
        assert_eq!(g.frequency("butter"), Some(1));
        assert_eq!(g.frequency("flour"), Some(1));

        assert!(Gazetteer::build(&[]).is_empty());
    }

    #[test]
    fn simple_match() {
        let set = gaz(&["butter"]).extract("Melt butter in oven");
        assert_eq!(set.keys().collect::<Vec<_>>(), vec!["butter"]);
    }

    #[test]
    fn longest_match_wins() {
        let set = gaz(&["cream cheese", "cream", "sugar"]).extract("Mix cream cheese and sugar");
        assert_eq!(set.keys().collect::<Vec<_>>(), vec!["cream cheese", "sugar"]);
    }

    #[test]
    fn no_match_across_punctuation() {
        let set = gaz(&["butter flour"]).extract("Add butter, flour.");
        assert!(set.is_empty());
    }

    #[test]
    fn hyphenated_surface() {
        let set = gaz(&["lime jello"]).extract("Dissolve lime Jell-O in water.");
        let e = set.get("lime jello").unwrap();
        assert_eq!(e.surface, "lime Jell-O");
    }

    #[test]
    fn quantity_span() {
        let set = gaz(&["egg"]).extract("Next add water 1 egg beaten and oil.");
        assert_eq!(set.get("egg").unwrap().category, Category::Ingredient);
        assert_eq!(set.get("1 egg").unwrap().category, Category::Quantity);
    }

    #[test]
    fn empty_gazetteer() {
        assert!(Gazetteer::default().extract("Melt butter").is_empty());
    }
}
