//! Accuracy, per-genre precision/recall/F1, confusion matrices and
//! one-vs-rest ROC curves.

mod report;
mod roc;

pub use report::{evaluate, write_report_dir, Evaluation, MetricsReport};
pub use roc::{auc, pair_count_auc, roc_curve, RocCurve, RocPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genre::{Genre, GENRE_COUNT};

/// Rows are gold genres, columns predicted genres.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; GENRE_COUNT]; GENRE_COUNT],
}

impl ConfusionMatrix {
    pub fn get(&self, gold: Genre, pred: Genre) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn add(&mut self, gold: Genre, pred: Genre) {
        self.counts[gold.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..GENRE_COUNT).map(|g| self.counts[g][g]).sum()
    }

    pub fn row_sum(&self, g: usize) -> u64 {
        self.counts[g].iter().sum()
    }

    pub fn col_sum(&self, g: usize) -> u64 {
        self.counts.iter().map(|r| r[g]).sum()
    }

    /// `None` when the matrix is empty.
    pub fn accuracy(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            n => Some(self.trace() as f64 / n as f64),
        }
    }
}

pub fn confusion(golds: &[Genre], preds: &[Genre]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::DimensionMismatch {
            expected: golds.len(),
            actual: preds.len(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in golds.iter().zip(preds) {
        m.add(*g, *p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenreScores {
    pub genre: Genre,
    pub support: u64,
    /// 0 when undefined; see `precision_defined`.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub per_genre: Vec<GenreScores>,
    /// Means over genres where the metric is defined; `None` if none is.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn precision_recall_f1(m: &ConfusionMatrix) -> Prf {
    let per_genre: Vec<GenreScores> = Genre::ALL
        .iter()
        .map(|&genre| {
            let g = genre.index();
            let hit = m.counts[g][g] as f64;
            let (row, col) = (m.row_sum(g), m.col_sum(g));
            let precision = if col > 0 { hit / col as f64 } else { 0.0 };
            let recall = if row > 0 { hit / row as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            GenreScores {
                genre,
                support: row,
                precision,
                recall,
                f1,
                precision_defined: col > 0,
                recall_defined: row > 0,
            }
        })
        .collect();
    Prf {
        macro_precision: mean(per_genre.iter().filter(|s| s.precision_defined).map(|s| s.precision)),
        macro_recall: mean(per_genre.iter().filter(|s| s.recall_defined).map(|s| s.recall)),
        macro_f1: mean(
            per_genre
                .iter()
                .filter(|s| s.precision_defined || s.recall_defined)
                .map(|s| s.f1),
        ),
        per_genre,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn confusion_examples() {
        let perfect = confusion(&Genre::ALL, &Genre::ALL).unwrap();
        for g in 0..9 {
            for p in 0..9 {
                assert_eq!(perfect.counts[g][p], (g == p) as u64);
            }
        }
        let m = confusion(&[Genre::Bakery, Genre::Bakery], &[Genre::Bakery, Genre::Drinks]).unwrap();
        assert_eq!(m.get(Genre::Bakery, Genre::Bakery), 1);
        assert_eq!(m.get(Genre::Bakery, Genre::Drinks), 1);
        assert!(confusion(&[Genre::Bakery], &[]).is_err());
        let empty = confusion(&[], &[]).unwrap();
        assert_eq!(empty.total(), 0);
        assert_eq!(empty.accuracy(), None);
    }

    #[test]
    fn prf_examples() {
        let perfect = precision_recall_f1(&confusion(&Genre::ALL, &Genre::ALL).unwrap());
        assert!(perfect
            .per_genre
            .iter()
            .all(|s| s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0));

        let m = confusion(&[Genre::Bakery, Genre::Bakery], &[Genre::Bakery, Genre::Drinks]).unwrap();
        let prf = precision_recall_f1(&m);
        let b = prf.per_genre[0];
        assert_eq!((b.precision, b.recall), (1.0, 0.5));
        assert!((b.f1 - 2.0 / 3.0).abs() < 1e-15);
        let meal = prf.per_genre[Genre::Meal.index()];
        assert!(!meal.precision_defined && !meal.recall_defined);
        let drinks = prf.per_genre[1];
        assert!(drinks.precision_defined && !drinks.recall_defined);
        assert_eq!(prf.macro_recall, Some(0.5));
    }

    #[test]
    fn micro_recall_is_accuracy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(1..200);
            let golds: Vec<Genre> = (0..n).map(|_| Genre::from_index(rng.random_range(0..9))).collect();
            let preds: Vec<Genre> = (0..n).map(|_| Genre::from_index(rng.random_range(0..9))).collect();
            let m = confusion(&golds, &preds).unwrap();
            let micro =
                (0..9).map(|g| m.counts[g][g]).sum::<u64>() as f64 / (0..9).map(|g| m.row_sum(g)).sum::<u64>() as f64;
            assert_eq!(micro, m.accuracy().unwrap());
        }
    }

    #[test]
    fn uniform_random_predictor_near_chance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let golds: Vec<Genre> = (0..9000).map(|k| Genre::from_index(k % 9)).collect();
        let preds: Vec<Genre> = (0..9000).map(|_| Genre::from_index(rng.random_range(0..9))).collect();
        let acc = confusion(&golds, &preds).unwrap().accuracy().unwrap();
        // Three binomial standard deviations at n = 9000.
        let sigma = ((1.0 / 9.0) * (8.0 / 9.0) / 9000.0f64).sqrt();
        assert!((acc - 1.0 / 9.0).abs() <= 3.0 * sigma, "{acc}");
    }
}
