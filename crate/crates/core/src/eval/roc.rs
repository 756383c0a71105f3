use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genre::Genre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Records scoring at least this are called positive; infinite for
    /// the origin.
    pub threshold: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub genre: Genre,
    pub positives: u64,
    pub negatives: u64,
    pub points: Vec<RocPoint>,
}

/// One-vs-rest ROC for `genre`: thresholds at each distinct score, highest
/// first.
pub fn roc_curve(genre: Genre, scores: &[f64], is_positive: &[bool]) -> Result<RocCurve> {
    if scores.len() != is_positive.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: is_positive.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::validation(format!("non-finite score {s} for genre {genre}")));
    }
    let positives = is_positive.iter().filter(|&&p| p).count() as u64;
    let negatives = is_positive.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::validation(format!(
            "ROC for genre {genre} needs both positive and negative records ({positives} positive, {negatives} negative)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let point = |threshold: f64, tp: u64, fp: u64| RocPoint {
        threshold,
        true_positives: tp,
        false_positives: fp,
        tpr: tp as f64 / positives as f64,
        fpr: fp as f64 / negatives as f64,
    };
    let mut points = vec![point(f64::INFINITY, 0, 0)];
    let (mut tp, mut fp) = (0, 0);
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if is_positive[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(point(t, tp, fp));
    }
    Ok(RocCurve {
        genre,
        positives,
        negatives,
        points,
    })
}

/// Trapezoidal area, accumulated in integer counts and divided once.
pub fn auc(curve: &RocCurve) -> f64 {
    let twice: u128 = curve
        .points
        .windows(2)
        .map(|w| {
            let dx = (w[1].false_positives - w[0].false_positives) as u128;
            dx * (w[1].true_positives + w[0].true_positives) as u128
        })
        .sum();
    twice as f64 / (2 * curve.positives as u128 * curve.negatives as u128) as f64
}

/// (concordant + ½·tied) / (P·N) over all positive/negative pairs.
pub fn pair_count_auc(scores: &[f64], is_positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| p)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut twice = 0u128;
    for p in &pos {
        for n in &neg {
            twice += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Some(twice as f64 / (2 * pos.len() as u128 * neg.len() as u128) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        let c = roc_curve(Genre::Bakery, &[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(auc(&c), 1.0);
        let c = roc_curve(Genre::Bakery, &[0.9, 0.8, 0.85, 0.7], &[true, true, false, false]).unwrap();
        assert_eq!(auc(&c), 0.75);
        let c = roc_curve(Genre::Bakery, &[0.5; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(auc(&c), 0.5);
    }

    #[test]
    fn curve_shape() {
        let c = roc_curve(
            Genre::Meal,
            &[0.3, 0.3, 0.9, 0.1, 0.6],
            &[true, false, false, true, true],
        )
        .unwrap();
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(c
            .points
            .windows(2)
            .all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
        assert_eq!(c.points.len(), 5);
    }

    #[test]
    fn single_class_names_genre() {
        let err = roc_curve(Genre::Fusion, &[0.1, 0.2], &[true, true]).unwrap_err();
        assert!(err.to_string().contains("Fusion"), "{err}");
    }
}
