use serde::{Deserialize, Serialize};

use super::{check_dim, cross_entropy, sgd, softmax, TrainConfig, TrainLog, VectorSet};
use crate::error::{Error, Result};
use crate::features::CountVector;
use crate::genre::GENRE_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    /// Softmax over scores, trained on mean cross-entropy.
    SoftmaxRegression,
    /// Nine one-vs-rest binary problems, trained on summed hinge loss.
    OvrHinge,
}

/// Scores `W·x + b` for the nine genres. Parameters are stored flat:
/// weights row-major (genre × dim), then the nine biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    kind: LinearKind,
    dim: usize,
    params: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(kind: LinearKind, dim: usize) -> LinearModel {
        LinearModel {
            kind,
            dim,
            params: vec![0.0; GENRE_COUNT * (dim + 1)],
        }
    }

    pub fn train(kind: LinearKind, data: &VectorSet, cfg: &TrainConfig) -> Result<(LinearModel, TrainLog)> {
        if data.is_empty() {
            return Err(Error::validation("cannot train on an empty set"));
        }
        let mut model = LinearModel::zeros(kind, data.dim);
        let weights = 0..GENRE_COUNT * data.dim;
        let mut params = std::mem::take(&mut model.params);
        let log = sgd::run(
            data.len(),
            cfg,
            &mut params,
            std::slice::from_ref(&weights),
            |p, batch| loss_and_grad(kind, data.dim, p, data, batch),
        )?;
        model.params = params;
        Ok((model, log))
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub fn weight(&self, genre_index: usize, feature: usize) -> f64 {
        self.params[genre_index * self.dim + feature]
    }

    pub fn bias(&self, genre_index: usize) -> f64 {
        self.params[GENRE_COUNT * self.dim + genre_index]
    }

    pub fn scores(&self, v: &CountVector) -> Result<Vec<f64>> {
        check_dim(v, self.dim)?;
        Ok(scores(self.dim, &self.params, v))
    }

    /// Class probabilities; for the hinge model these are a softmax over
    /// margins and carry no calibration.
    pub fn predict_proba(&self, v: &CountVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.scores(v)?))
    }

    /// Mean training loss over `batch` (indices into `data`) and its
    /// gradient with respect to [`params`](Self::params). Weight decay is
    /// applied separately by the optimizer and is not part of this loss.
    pub fn loss_and_grad(&self, data: &VectorSet, batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        if data.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: data.dim,
            });
        }
        Ok(loss_and_grad(self.kind, self.dim, &self.params, data, batch))
    }

    pub(crate) fn to_parts(&self) -> (Vec<u64>, Vec<f64>) {
        (Vec::new(), self.params.clone())
    }

    pub(crate) fn from_parts(kind: LinearKind, dim: usize, params: &[f64]) -> Result<LinearModel> {
        let mut m = LinearModel::zeros(kind, dim);
        if params.len() != m.params.len() {
            return Err(Error::ModelFile(format!(
                "linear model expects {} parameters, found {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::ModelFile("linear model has non-finite parameters".into()));
        }
        m.params = params.to_vec();
        Ok(m)
    }
}

fn scores(dim: usize, params: &[f64], v: &CountVector) -> Vec<f64> {
    let bias = &params[GENRE_COUNT * dim..];
    (0..GENRE_COUNT)
        .map(|c| {
            let row = &params[c * dim..(c + 1) * dim];
            bias[c]
                + v.entries()
                    .iter()
                    .map(|&(i, n)| row[i as usize] * n as f64)
                    .sum::<f64>()
        })
        .collect()
}

fn loss_and_grad(kind: LinearKind, dim: usize, params: &[f64], data: &VectorSet, batch: &[usize]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for &k in batch {
        let v = &data.vectors[k];
        let gold = data.labels[k].index();
        let s = scores(dim, params, v);
        // dL/ds for this example.
        let mut ds = [0.0; GENRE_COUNT];
        match kind {
            LinearKind::SoftmaxRegression => {
                let p = softmax(&s);
                loss += cross_entropy(&s, gold);
                for c in 0..GENRE_COUNT {
                    ds[c] = p[c] - if c == gold { 1.0 } else { 0.0 };
                }
            }
            LinearKind::OvrHinge => {
                for c in 0..GENRE_COUNT {
                    let y = if c == gold { 1.0 } else { -1.0 };
                    let slack = 1.0 - y * s[c];
                    if slack > 0.0 {
                        loss += slack;
                        ds[c] = -y;
                    }
                }
            }
        }
        for (c, d) in ds.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for &(i, n) in v.entries() {
                grad[c * dim + i as usize] += d * n as f64;
            }
            grad[GENRE_COUNT * dim + c] += d;
        }
    }
    let m = batch.len().max(1) as f64;
    for g in &mut grad {
        *g /= m;
    }
    (loss / m, grad)
}
