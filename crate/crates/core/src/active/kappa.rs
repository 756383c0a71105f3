//! Fleiss' kappa over nine genre categories.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genre::{Genre, GENRE_COUNT};

/// Per-item rating counts; every item has the same number of raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaTable {
    rows: Vec<[u32; GENRE_COUNT]>,
    raters: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Kappa {
    Value {
        kappa: f64,
        observed: f64,
        expected: f64,
    },
    /// Every rating fell in one category, so chance agreement is 1 and
    /// kappa is undefined.
    Degenerate,
}

impl Kappa {
    pub fn value(&self) -> Option<f64> {
        match self {
            Kappa::Value { kappa, .. } => Some(*kappa),
            Kappa::Degenerate => None,
        }
    }
}

impl KappaTable {
    pub fn new(rows: Vec<[u32; GENRE_COUNT]>) -> Result<KappaTable> {
        if rows.len() < 2 {
            return Err(Error::validation(format!(
                "kappa needs at least 2 items, got {}",
                rows.len()
            )));
        }
        let raters: u32 = rows[0].iter().sum();
        if raters < 2 {
            return Err(Error::validation(format!(
                "kappa needs at least 2 raters per item, got {raters}"
            )));
        }
        if let Some(k) = rows.iter().position(|r| r.iter().sum::<u32>() != raters) {
            return Err(Error::validation(format!(
                "item {k} has {} ratings; every item needs {raters}",
                rows[k].iter().sum::<u32>()
            )));
        }
        Ok(KappaTable { rows, raters })
    }

    /// Builds from (item, rater, genre) triples. Each rater may rate an item
    /// once.
    pub fn from_ratings(ratings: &[(String, String, Genre)]) -> Result<KappaTable> {
        let mut items: BTreeMap<&str, [u32; GENRE_COUNT]> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (item, rater, g) in ratings {
            if !seen.insert((item.as_str(), rater.as_str())) {
                return Err(Error::validation(format!("rater {rater} rated item {item} twice")));
            }
            items.entry(item).or_insert([0; GENRE_COUNT])[g.index()] += 1;
        }
        KappaTable::new(items.into_values().collect())
    }

    pub fn rows(&self) -> &[[u32; GENRE_COUNT]] {
        &self.rows
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }
}

/// κ = (P̄ − P̄e)/(1 − P̄e). Sums are taken over integers so perfect
/// agreement yields exactly 1.
pub fn fleiss_kappa(table: &KappaTable) -> Kappa {
    let n = table.raters as u64;
    let items = table.rows.len() as u64;
    let mut squares = 0u64;
    let mut totals = [0u64; GENRE_COUNT];
    for row in &table.rows {
        for (g, &c) in row.iter().enumerate() {
            squares += c as u64 * c as u64;
            totals[g] += c as u64;
        }
    }
    let all = (items * n) as f64;
    let observed = (squares - items * n) as f64 / (items * n * (n - 1)) as f64;
    let total_sq: u128 = totals.iter().map(|&t| t as u128 * t as u128).sum();
    if total_sq == (items as u128 * n as u128).pow(2) {
        return Kappa::Degenerate;
    }
    let expected = total_sq as f64 / (all * all);
    Kappa::Value {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
    }
}

/// Reads `item_id,rater_id,label` rows (label is a genre id or name).
pub fn read_ratings_csv<R: Read>(reader: R) -> Result<Vec<(String, String, Genre)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(format!("ratings file lacks column {name:?}")))
    };
    let (item, rater, label) = (col("item_id")?, col("rater_id")?, col("label")?);
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let g: Genre = row[label]
            .parse()
            .map_err(|e| Error::validation(format!("ratings row {}: {e}", k + 1)))?;
        out.push((row[item].to_owned(), row[rater].to_owned(), g));
    }
    Ok(out)
}

pub fn kappa_from_csv(path: &Path) -> Result<Kappa> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(fleiss_kappa(&KappaTable::from_ratings(&read_ratings_csv(f)?)?))
}
