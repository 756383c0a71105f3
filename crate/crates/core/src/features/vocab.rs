use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{compose_feature_text, tokenize, FeatureSpec};
use crate::corpus::RecipeRecord;
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const SPECIAL_TOKENS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

/// Frozen term↔index map. Indices 0..4 are the special tokens; terms are
/// dense from 4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_terms(std::iter::empty::<&str>())
    }
}

impl Vocabulary {
    /// Builds from terms in index order (after the specials). Repeated terms
    /// keep their first index.
    pub fn from_terms<I, S>(terms: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            terms: SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect(),
            index: HashMap::new(),
        };
        for t in terms {
            let t = t.into();
            if v.index.contains_key(&t) || SPECIAL_TOKENS.contains(&t.as_str()) {
                continue;
            }
            v.index.insert(t.clone(), v.terms.len() as u32);
            v.terms.push(t);
        }
        v
    }

    /// Keeps terms with document frequency ≥ `min_df`, ranked by document
    /// frequency (descending) then lexicographically, up to `max_size`
    /// entries including the four specials.
    pub fn build<'r>(
        records: impl IntoIterator<Item = &'r RecipeRecord>,
        spec: FeatureSpec,
        max_size: usize,
        min_df: usize,
    ) -> Result<Vocabulary> {
        if max_size <= SPECIAL_TOKENS.len() {
            return Err(Error::validation(format!("max_size must exceed 4, got {max_size}")));
        }
        if min_df < 1 {
            return Err(Error::validation("min_df must be at least 1"));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            let text = compose_feature_text(r, spec)?;
            let unique: BTreeSet<String> = tokenize(&text).into_iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        Ok(Vocabulary::from_document_frequencies(df, max_size, min_df))
    }

    pub fn from_document_frequencies(df: BTreeMap<String, usize>, max_size: usize, min_df: usize) -> Vocabulary {
        let mut ranked: Vec<(String, usize)> = df.into_iter().filter(|&(_, n)| n >= min_df).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size.saturating_sub(SPECIAL_TOKENS.len()));
        Vocabulary::from_terms(ranked.into_iter().map(|(t, _)| t))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.len() == SPECIAL_TOKENS.len()
    }

    /// Index of a regular term; specials and unknown terms give `None`.
    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> Option<&str> {
        self.terms.get(index as usize).map(String::as_str)
    }

    /// Regular terms in index order.
    pub fn terms(&self) -> &[String] {
        &self.terms[SPECIAL_TOKENS.len()..]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.terms {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Vocabulary> {
        let lines: Vec<String> = r
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io("<vocabulary>", e))?;
        if lines.len() < SPECIAL_TOKENS.len() || lines[..4] != SPECIAL_TOKENS {
            return Err(Error::Format(
                "vocabulary must start with [PAD], [UNK], [CLS], [SEP]".into(),
            ));
        }
        let v = Vocabulary::from_terms(lines[4..].iter().cloned());
        if v.len() != lines.len() {
            return Err(Error::Format("vocabulary contains duplicate terms".into()));
        }
        Ok(v)
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn docs(titles: &[&str]) -> Vec<RecipeRecord> {
        titles
            .iter()
            .enumerate()
            .map(|(i, t)| RecipeRecord {
                id: i as u64,
                title: t.to_string(),
                directions: vec!["x".into()],
                ner: vec![],
                extended_ner: None,
                genre: None,
                provenance: Provenance::Unlabeled,
            })
            .collect()
    }

    #[test]
    fn min_df_filters() {
        let v = Vocabulary::build(&docs(&["a b", "b c"]), FeatureSpec::Title, 100, 2).unwrap();
        assert_eq!(v.terms(), &["b".to_string()]);
    }

    #[test]
    fn ranking_and_cap() {
        let v = Vocabulary::build(&docs(&["a b", "b c", "c d"]), FeatureSpec::Title, 1000, 1).unwrap();
        assert_eq!(v.terms(), &["b", "c", "a", "d"]);
        let v = Vocabulary::build(&docs(&["a b", "b c", "c d"]), FeatureSpec::Title, 6, 1).unwrap();
        assert_eq!(v.terms(), &["b", "c"]);
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn bad_params() {
        assert!(Vocabulary::build(&[], FeatureSpec::Title, 4, 1).is_err());
        assert!(Vocabulary::build(&[], FeatureSpec::Title, 10, 0).is_err());
        assert!(Vocabulary::build(&[], FeatureSpec::Title, 10, 1).unwrap().is_empty());
    }

    #[test]
    fn file_roundtrip() {
        let v = Vocabulary::from_terms(["sugar", "°", "flour"]);
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "[PAD]\n[UNK]\n[CLS]\n[SEP]\nsugar\n°\nflour\n"
        );
        assert_eq!(Vocabulary::read_from(buf.as_slice()).unwrap(), v);
        assert!(Vocabulary::read_from("sugar\n".as_bytes()).is_err());
    }
}
