//! Classifier inputs: tokenization, feature-text composition, count vectors
//! and fixed-length token sequences.

mod vocab;

pub use vocab::{Vocabulary, CLS_ID, PAD_ID, SEP_ID, SPECIAL_TOKENS, UNK_ID};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::RecipeRecord;
use crate::entities::replace_degree_escapes;
use crate::error::{Error, Result};

/// Lowercases and splits on anything that is not a letter, digit or degree
/// mark. Each degree mark is a token of its own; the escaped `°`
/// sequence counts as a degree mark.
pub fn tokenize(text: &str) -> Vec<String> {
    let text = replace_degree_escapes(text);
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c == '°' {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push("°".to_owned());
        } else if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSpec {
    Title,
    TitleNer,
    TitleExtNer,
    Directions,
}

impl FeatureSpec {
    pub const ALL: [FeatureSpec; 4] = [
        FeatureSpec::Title,
        FeatureSpec::TitleNer,
        FeatureSpec::TitleExtNer,
        FeatureSpec::Directions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSpec::Title => "title",
            FeatureSpec::TitleNer => "title-ner",
            FeatureSpec::TitleExtNer => "title-ext-ner",
            FeatureSpec::Directions => "directions",
        }
    }

    /// Sequence length used when encoding for the neural model.
    pub fn max_len(self) -> usize {
        match self {
            FeatureSpec::Directions => 512,
            _ => 256,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            FeatureSpec::Title => 0,
            FeatureSpec::TitleNer => 1,
            FeatureSpec::TitleExtNer => 2,
            FeatureSpec::Directions => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<FeatureSpec> {
        FeatureSpec::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "title" => Ok(FeatureSpec::Title),
            "title-ner" | "titlener" => Ok(FeatureSpec::TitleNer),
            "title-ext-ner" | "title-extended-ner" | "titleextner" => Ok(FeatureSpec::TitleExtNer),
            "directions" => Ok(FeatureSpec::Directions),
            _ => Err(Error::validation(format!(
                "unknown feature {s:?} (expected title, title-ner, title-ext-ner or directions)"
            ))),
        }
    }
}

fn join_nonempty<'a>(head: &str, rest: impl Iterator<Item = &'a str>) -> String {
    let mut out = head.to_owned();
    for part in rest {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(part);
    }
    out
}

pub fn compose_feature_text(record: &RecipeRecord, spec: FeatureSpec) -> Result<String> {
    Ok(match spec {
        FeatureSpec::Title => record.title.clone(),
        FeatureSpec::TitleNer => join_nonempty(&record.title, record.ner.iter().map(String::as_str)),
        FeatureSpec::TitleExtNer => {
            let ext = record.extended_ner.as_ref().ok_or_else(|| {
                Error::validation(format!(
                    "record {} has no extended entities; run extend-ner on the corpus first",
                    record.id
                ))
            })?;
            join_nonempty(&record.title, ext.surfaces())
        }
        FeatureSpec::Directions => record.directions.join(" "),
    })
}

/// Checks that every record carries the fields `spec` needs.
pub fn check_records(records: &[RecipeRecord], spec: FeatureSpec) -> Result<()> {
    if spec == FeatureSpec::TitleExtNer {
        if let Some(r) = records.iter().find(|r| r.extended_ner.is_none()) {
            return Err(Error::validation(format!(
                "record {} has no extended entities; run extend-ner on the corpus first",
                r.id
            )));
        }
    }
    Ok(())
}

/// Sparse term counts, indices strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    entries: Vec<(u32, u32)>,
}

impl CountVector {
    /// Builds from arbitrary (index, count) pairs; duplicates are summed and
    /// zero counts dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> CountVector {
        let mut map = std::collections::BTreeMap::new();
        for (i, c) in pairs {
            *map.entry(i).or_insert(0u32) += c;
        }
        CountVector {
            entries: map.into_iter().filter(|&(_, c)| c > 0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn get(&self, index: u32) -> u32 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0, |k| self.entries[k].1)
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn scaled(&self, factor: u32) -> CountVector {
        CountVector {
            entries: self.entries.iter().map(|&(i, c)| (i, c * factor)).collect(),
        }
    }
}

/// Counts of in-vocabulary tokens; unknown tokens are skipped.
pub fn vectorize(text: &str, vocab: &Vocabulary) -> CountVector {
    CountVector::from_pairs(tokenize(text).iter().filter_map(|t| vocab.index_of(t)).map(|i| (i, 1)))
}

/// `[CLS] tokens… [SEP] [PAD]…`, exactly `max_len` ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    ids: Vec<u32>,
}

impl TokenSequence {
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// Content ids between `[CLS]` and `[SEP]`.
    pub fn content(&self) -> &[u32] {
        let sep = self.ids.iter().position(|&i| i == SEP_ID).unwrap_or(self.ids.len());
        &self.ids[1..sep]
    }

    pub fn from_ids(ids: Vec<u32>) -> Result<TokenSequence> {
        if ids.len() < 3 || ids[0] != CLS_ID {
            return Err(Error::validation(
                "sequence must start with [CLS] and hold at least 3 ids",
            ));
        }
        let seps: Vec<usize> = ids
            .iter()
            .enumerate()
            .filter(|(_, &i)| i == SEP_ID)
            .map(|(k, _)| k)
            .collect();
        if seps.len() != 1 || ids[seps[0] + 1..].iter().any(|&i| i != PAD_ID) {
            return Err(Error::validation("sequence must have one [SEP] followed only by [PAD]"));
        }
        Ok(TokenSequence { ids })
    }
}

pub fn encode_sequence(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len < 3 {
        return Err(Error::validation(format!("max_len must be at least 3, got {max_len}")));
    }
    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    ids.extend(
        tokenize(text)
            .iter()
            .take(max_len - 2)
            .map(|t| vocab.index_of(t).unwrap_or(UNK_ID)),
    );
    ids.push(SEP_ID);
    ids.resize(max_len, PAD_ID);
    Ok(TokenSequence { ids })
}
