//! Recipe records and corpus-level operations.

mod canonical;
mod csv_io;
mod split;
mod stats;

pub use canonical::{read_canonical, read_canonical_from, write_canonical, write_canonical_to};
pub use csv_io::{
    format_list_cell, ingest_csv, ingest_csv_reader, parse_list_cell, write_csv, write_csv_to, CsvFormat, IngestReport,
    RowError,
};
pub use split::{equalize, split_stratified, DatasetSplit, SplitPart, SplitRatios};
pub use stats::{corpus_stats, CorpusStats, GenreCount};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entities::{entity_key, normalize_entity, EntitySet};
use crate::error::{Error, Result};
use crate::genre::Genre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Machine,
    Unlabeled,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Human => "human",
            Provenance::Machine => "machine",
            Provenance::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Result<Provenance> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(Provenance::Human),
            "machine" => Ok(Provenance::Machine),
            "unlabeled" | "" => Ok(Provenance::Unlabeled),
            other => Err(Error::validation(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecipeRecord {
    pub id: u64,
    pub title: String,
    pub directions: Vec<String>,
    pub ner: Vec<String>,
    pub extended_ner: Option<EntitySet>,
    pub genre: Option<Genre>,
    pub provenance: Provenance,
}

impl RecipeRecord {
    pub fn is_labeled(&self) -> bool {
        self.genre.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id;
        if self.title.trim().is_empty() {
            return Err(Error::validation(format!("record {id}: empty title")));
        }
        if self.directions.is_empty() {
            return Err(Error::validation(format!("record {id}: no direction steps")));
        }
        match (self.genre, self.provenance) {
            (Some(_), Provenance::Unlabeled) => {
                return Err(Error::validation(format!(
                    "record {id}: labeled record has provenance 'unlabeled'"
                )))
            }
            (None, Provenance::Human | Provenance::Machine) => {
                return Err(Error::validation(format!(
                    "record {id}: unlabeled record has provenance {}",
                    self.provenance.as_str()
                )))
            }
            _ => {}
        }
        if let Some(ext) = &self.extended_ner {
            for s in &self.ner {
                let key = entity_key(&normalize_entity(s));
                if !key.is_empty() && !ext.contains_key(&key) {
                    return Err(Error::validation(format!(
                        "record {id}: extended_ner lacks source entity {s:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Loads a corpus by extension: `.csv` goes through CSV ingest (format
/// detected from the header, row errors are fatal), anything else is read as
/// the line-delimited canonical format.
pub fn load_corpus(path: &Path) -> Result<Vec<RecipeRecord>> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let report = ingest_csv(path, None)?;
        if let Some(first) = report.errors.into_iter().next() {
            return Err(Error::Validation(format!(
                "{}: row {}: {}",
                path.display(),
                first.row,
                first.error
            )));
        }
        Ok(report.records)
    } else {
        read_canonical(path)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn labeled(id: u64, genre: Genre) -> RecipeRecord {
        RecipeRecord {
            id,
            title: format!("recipe {id}"),
            directions: vec!["Mix.".into()],
            ner: vec![],
            extended_ner: None,
            genre: Some(genre),
            provenance: Provenance::Human,
        }
    }
}
