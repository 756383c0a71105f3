use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::RecipeRecord;
use crate::error::{Error, Result};
use crate::genre::Genre;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::validation(format!("split ratios must be positive: {all:?}")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("split ratios must sum to 1: {all:?}")));
        }
        Ok(())
    }

    /// (train, val, test) sizes for a class of `n` records: train is
    /// `floor(train·n)`, the rest is shared between val and test in
    /// proportion, with val taking the rounding surplus.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = ((self.train * n as f64) + 1e-9).floor() as usize;
        let rest = n - train.min(n);
        let val_share = self.val / (self.val + self.test);
        let val = ((rest as f64 * val_share) - 1e-9).ceil().max(0.0) as usize;
        let val = val.min(rest);
        (train.min(n), val, rest - val)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Val,
    Test,
    All,
}

impl SplitPart {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Val => "val",
            SplitPart::Test => "test",
            SplitPart::All => "all",
        }
    }
}

impl std::str::FromStr for SplitPart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitPart::Train),
            "val" | "validation" => Ok(SplitPart::Val),
            "test" => Ok(SplitPart::Test),
            "all" => Ok(SplitPart::All),
            _ => Err(Error::validation(format!("unknown split part {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<u64>,
    pub val_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
}

impl DatasetSplit {
    pub fn ids(&self, part: SplitPart) -> Vec<u64> {
        match part {
            SplitPart::Train => self.train_ids.clone(),
            SplitPart::Val => self.val_ids.clone(),
            SplitPart::Test => self.test_ids.clone(),
            SplitPart::All => {
                let mut all = self.train_ids.clone();
                all.extend(&self.val_ids);
                all.extend(&self.test_ids);
                all
            }
        }
    }

    /// Records belonging to `part`, in split order.
    pub fn select<'a>(&self, records: &'a [RecipeRecord], part: SplitPart) -> Vec<&'a RecipeRecord> {
        let by_id: std::collections::HashMap<u64, &RecipeRecord> = records.iter().map(|r| (r.id, r)).collect();
        self.ids(part).iter().filter_map(|id| by_id.get(id).copied()).collect()
    }
}

fn group_by_genre(records: &[RecipeRecord]) -> Result<BTreeMap<Genre, Vec<&RecipeRecord>>> {
    let unlabeled: Vec<u64> = records.iter().filter(|r| r.genre.is_none()).map(|r| r.id).collect();
    if !unlabeled.is_empty() {
        return Err(Error::validation(format!(
            "unlabeled records cannot be split: ids {unlabeled:?}"
        )));
    }
    let mut groups: BTreeMap<Genre, Vec<&RecipeRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.genre.expect("checked")).or_default().push(r);
    }
    for members in groups.values_mut() {
        members.sort_by_key(|r| r.id);
    }
    Ok(groups)
}

/// Per-genre shuffled split. The result depends only on the record ids,
/// labels, ratios and seed, not on input order.
pub fn split_stratified(records: &[RecipeRecord], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    let groups = group_by_genre(records)?;
    let mut split = DatasetSplit::default();
    for (genre, members) in groups {
        if members.len() < 3 {
            return Err(Error::validation(format!(
                "genre {genre} has {} records; at least 3 are needed for a three-way split",
                members.len()
            )));
        }
        let mut ids: Vec<u64> = members.iter().map(|r| r.id).collect();
        ids.shuffle(&mut stream(seed, Domain::Split, genre.id() as u64));
        let (train, val, _) = ratios.counts(ids.len());
        split.train_ids.extend(&ids[..train]);
        split.val_ids.extend(&ids[train..train + val]);
        split.test_ids.extend(&ids[train + val..]);
    }
    Ok(split)
}

/// Samples exactly `per_genre` records from each of the nine genres without
/// replacement. Output is grouped by genre, ids ascending within a genre.
pub fn equalize(records: &[RecipeRecord], per_genre: usize, seed: u64) -> Result<Vec<RecipeRecord>> {
    let groups = group_by_genre(records)?;
    for g in Genre::ALL {
        let have = groups.get(&g).map_or(0, Vec::len);
        if have < per_genre {
            return Err(Error::validation(format!(
                "genre {g} has {have} records, fewer than the requested {per_genre}"
            )));
        }
    }
    let mut out = Vec::with_capacity(per_genre * Genre::ALL.len());
    for (genre, mut members) in groups {
        members.shuffle(&mut stream(seed, Domain::Equalize, genre.id() as u64));
        let mut chosen: Vec<&RecipeRecord> = members.into_iter().take(per_genre).collect();
        chosen.sort_by_key(|r| r.id);
        out.extend(chosen.into_iter().cloned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::labeled;
    use std::collections::HashSet;

    fn corpus(per_genre: &[(Genre, usize)]) -> Vec<RecipeRecord> {
        let mut out = Vec::new();
        for &(g, n) in per_genre {
            for _ in 0..n {
                let id = out.len() as u64;
                out.push(labeled(id, g));
            }
        }
        out
    }

    fn sizes(s: &DatasetSplit) -> (usize, usize, usize) {
        (s.train_ids.len(), s.val_ids.len(), s.test_ids.len())
    }

    #[test]
    fn ratio_counts() {
        let r = SplitRatios::default();
        assert_eq!(r.counts(100), (80, 10, 10));
        assert_eq!(r.counts(10), (8, 1, 1));
        assert_eq!(r.counts(11), (8, 2, 1));
        assert_eq!(r.counts(3), (2, 1, 0));
    }

    #[test]
    fn split_examples() {
        let recs = corpus(&[(Genre::Bakery, 100)]);
        assert_eq!(
            sizes(&split_stratified(&recs, SplitRatios::default(), 7).unwrap()),
            (80, 10, 10)
        );
        let recs = corpus(&[(Genre::Drinks, 10)]);
        assert_eq!(
            sizes(&split_stratified(&recs, SplitRatios::default(), 7).unwrap()),
            (8, 1, 1)
        );
        let recs = corpus(&[(Genre::Drinks, 11)]);
        assert_eq!(
            sizes(&split_stratified(&recs, SplitRatios::default(), 7).unwrap()),
            (8, 2, 1)
        );
    }

    #[test]
    fn split_errors() {
        let mut recs = corpus(&[(Genre::Bakery, 10)]);
        recs[3].genre = None;
        recs[3].provenance = crate::corpus::Provenance::Unlabeled;
        let err = split_stratified(&recs, SplitRatios::default(), 1).unwrap_err();
        assert!(err.to_string().contains("[3]"), "{err}");

        let recs = corpus(&[(Genre::Bakery, 10), (Genre::Meal, 2)]);
        assert!(split_stratified(&recs, SplitRatios::default(), 1).is_err());

        let bad = SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.2,
        };
        assert!(split_stratified(&corpus(&[(Genre::Bakery, 10)]), bad, 1).is_err());
    }

    #[test]
    fn split_ignores_input_order() {
        let recs = corpus(&[(Genre::Bakery, 20), (Genre::Sides, 15)]);
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(
            split_stratified(&recs, SplitRatios::default(), 5).unwrap(),
            split_stratified(&rev, SplitRatios::default(), 5).unwrap()
        );
    }

    #[test]
    fn equalize_examples() {
        let one_each = corpus(&Genre::ALL.map(|g| (g, 1)));
        let out = equalize(&one_each, 1, 3).unwrap();
        assert_eq!(out, one_each);

        let five_each = corpus(&Genre::ALL.map(|g| (g, 5)));
        let a: HashSet<u64> = equalize(&five_each, 3, 9).unwrap().iter().map(|r| r.id).collect();
        let b: HashSet<u64> = equalize(&five_each, 3, 9).unwrap().iter().map(|r| r.id).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 27);

        let err = equalize(&five_each, 6, 9).unwrap_err();
        assert!(err.to_string().contains("Bakery has 5"), "{err}");
    }
}
