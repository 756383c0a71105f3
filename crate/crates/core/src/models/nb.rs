use super::{check_dim, softmax, VectorSet};
use crate::error::{Error, Result};
use crate::features::CountVector;
use crate::genre::GENRE_COUNT;

/// Multinomial naive Bayes with additive smoothing. Only indices at or above
/// `reserved` count as vocabulary terms.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    alpha: f64,
    dim: usize,
    reserved: usize,
    log_prior: [f64; GENRE_COUNT],
    /// Row-major GENRE_COUNT × (dim − reserved).
    log_lik: Vec<f64>,
}

impl NaiveBayesModel {
    pub fn train(data: &VectorSet, alpha: f64) -> Result<NaiveBayesModel> {
        if data.is_empty() {
            return Err(Error::validation("cannot train naive Bayes on an empty set"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::validation(format!("smoothing alpha must be > 0, got {alpha}")));
        }
        let width = data.dim - data.reserved;
        if width == 0 {
            return Err(Error::validation("vocabulary has no terms"));
        }
        let mut class_docs = [0u64; GENRE_COUNT];
        let mut counts = vec![0u64; GENRE_COUNT * width];
        let mut totals = [0u64; GENRE_COUNT];
        for (v, g) in data.vectors.iter().zip(&data.labels) {
            let c = g.index();
            class_docs[c] += 1;
            for &(i, n) in v.entries() {
                let i = i as usize;
                if i >= data.reserved {
                    counts[c * width + i - data.reserved] += n as u64;
                    totals[c] += n as u64;
                }
            }
        }
        let n = data.len() as f64;
        let mut log_prior = [f64::NEG_INFINITY; GENRE_COUNT];
        for c in 0..GENRE_COUNT {
            if class_docs[c] > 0 {
                log_prior[c] = (class_docs[c] as f64 / n).ln();
            }
        }
        let mut log_lik = vec![0.0; GENRE_COUNT * width];
        for c in 0..GENRE_COUNT {
            let denom = (totals[c] as f64 + alpha * width as f64).ln();
            for t in 0..width {
                log_lik[c * width + t] = (counts[c * width + t] as f64 + alpha).ln() - denom;
            }
        }
        Ok(NaiveBayesModel {
            alpha,
            dim: data.dim,
            reserved: data.reserved,
            log_prior,
            log_lik,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_prior(&self) -> &[f64; GENRE_COUNT] {
        &self.log_prior
    }

    /// ln P(term | genre) for the vocabulary index `index`.
    pub fn log_likelihood(&self, genre_index: usize, index: usize) -> Option<f64> {
        let width = self.dim - self.reserved;
        if index < self.reserved || index >= self.dim || genre_index >= GENRE_COUNT {
            return None;
        }
        Some(self.log_lik[genre_index * width + index - self.reserved])
    }

    /// Unnormalized log posterior per genre.
    pub fn joint_log_likelihood(&self, v: &CountVector) -> Result<Vec<f64>> {
        check_dim(v, self.dim)?;
        let width = self.dim - self.reserved;
        let mut out = self.log_prior.to_vec();
        for (c, slot) in out.iter_mut().enumerate() {
            let row = &self.log_lik[c * width..(c + 1) * width];
            for &(i, n) in v.entries() {
                let i = i as usize;
                if i >= self.reserved {
                    *slot += n as f64 * row[i - self.reserved];
                }
            }
        }
        Ok(out)
    }

    pub fn predict_proba(&self, v: &CountVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.joint_log_likelihood(v)?))
    }

    pub(crate) fn to_parts(&self) -> (Vec<u64>, Vec<f64>) {
        let mut params = Vec::with_capacity(1 + GENRE_COUNT + self.log_lik.len());
        params.push(self.alpha);
        params.extend_from_slice(&self.log_prior);
        params.extend_from_slice(&self.log_lik);
        (vec![self.reserved as u64], params)
    }

    pub(crate) fn from_parts(dim: usize, shape: &[u64], params: &[f64]) -> Result<NaiveBayesModel> {
        let [reserved] = shape else {
            return Err(Error::ModelFile("naive Bayes shape must hold one value".into()));
        };
        let reserved = *reserved as usize;
        if reserved > dim {
            return Err(Error::ModelFile("reserved width exceeds dimension".into()));
        }
        let width = dim - reserved;
        if params.len() != 1 + GENRE_COUNT + GENRE_COUNT * width {
            return Err(Error::ModelFile(format!(
                "naive Bayes expects {} parameters, found {}",
                1 + GENRE_COUNT + GENRE_COUNT * width,
                params.len()
            )));
        }
        let mut log_prior = [0.0; GENRE_COUNT];
        log_prior.copy_from_slice(&params[1..1 + GENRE_COUNT]);
        Ok(NaiveBayesModel {
            alpha: params[0],
            dim,
            reserved,
            log_prior,
            log_lik: params[1 + GENRE_COUNT..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genre::Genre;

    fn cv(pairs: &[(u32, u32)]) -> CountVector {
        CountVector::from_pairs(pairs.iter().copied())
    }

    // Vocabulary indices: 4 = sugar, 5 = salt.
    fn sugar_salt() -> VectorSet {
        VectorSet::new(
            vec![cv(&[(4, 2)]), cv(&[(5, 1)])],
            vec![Genre::Bakery, Genre::Drinks],
            6,
        )
        .unwrap()
    }

    #[test]
    fn smoothed_likelihood() {
        let m = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        assert!((m.log_likelihood(0, 4).unwrap().exp() - 0.75).abs() < 1e-15);
        assert!((m.log_likelihood(1, 4).unwrap().exp() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn posterior_by_hand() {
        let m = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        let p = m.predict_proba(&cv(&[(4, 1)])).unwrap();
        assert!((p[0] - 9.0 / 13.0).abs() < 1e-12);
        assert!((p[1] - 4.0 / 13.0).abs() < 1e-12);
        assert!(p[2..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_vector_gives_priors() {
        let m = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        let p = m.predict_proba(&CountVector::default()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_class_prior_is_zero() {
        let data = VectorSet::new(vec![cv(&[(4, 1)])], vec![Genre::Meal], 5).unwrap();
        let m = NaiveBayesModel::train(&data, 1.0).unwrap();
        assert_eq!(m.log_prior()[Genre::Meal.index()], 0.0);
    }

    #[test]
    fn normalization_invariants() {
        let m = NaiveBayesModel::train(&sugar_salt(), 0.5).unwrap();
        let prior: f64 = m.log_prior().iter().map(|l| l.exp()).sum();
        assert!((prior - 1.0).abs() < 1e-9);
        for c in 0..GENRE_COUNT {
            let s: f64 = (4..6).map(|i| m.log_likelihood(c, i).unwrap().exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicated_training_set() {
        let a = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        let mut d = sugar_salt();
        d.vectors = [d.vectors.clone(), d.vectors.clone()].concat();
        d.labels = d.labels.repeat(2);
        let same_alpha = NaiveBayesModel::train(&d, 1.0).unwrap();
        assert_eq!(a.log_prior(), same_alpha.log_prior());
        // Counts doubled, so the posterior only matches with alpha doubled too.
        let scaled = NaiveBayesModel::train(&d, 2.0).unwrap();
        let x = cv(&[(4, 1), (5, 3)]);
        let (pa, pb) = (a.predict_proba(&x).unwrap(), scaled.predict_proba(&x).unwrap());
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let empty = VectorSet::new(vec![], vec![], 6).unwrap();
        assert!(NaiveBayesModel::train(&empty, 1.0).is_err());
        assert!(NaiveBayesModel::train(&sugar_salt(), 0.0).is_err());
        let m = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        assert!(matches!(
            m.predict_proba(&cv(&[(9, 1)])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parts_roundtrip() {
        let m = NaiveBayesModel::train(&sugar_salt(), 1.0).unwrap();
        let (shape, params) = m.to_parts();
        assert_eq!(NaiveBayesModel::from_parts(6, &shape, &params).unwrap(), m);
    }
}
