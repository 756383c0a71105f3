//! Genre classifiers trained from scratch.

mod classifier;
mod container;
mod forest;
mod linear;
mod mlp;
mod nb;
mod sgd;

pub use classifier::{Classifier, ModelSettings};
pub use container::{read_container, write_container, ContainerHeader, FORMAT_VERSION, MAGIC};
pub use forest::{ForestConfig, ForestModel};
pub use linear::{LinearKind, LinearModel};
pub use mlp::{MlpConfig, MlpModel};
pub use nb::NaiveBayesModel;
pub use sgd::{learning_rate_at, TrainLog};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CountVector, TokenSequence, SPECIAL_TOKENS};
use crate::genre::{Genre, GENRE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::linear()
    }
}

impl TrainConfig {
    /// Defaults for the linear models.
    pub fn linear() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 128,
            epochs: 10,
            warmup_fraction: 0.2,
            weight_decay: 0.01,
            seed: 0,
        }
    }

    /// Defaults for the neural model.
    pub fn mlp() -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-5,
            ..TrainConfig::linear()
        }
    }

    pub fn for_kind(kind: ModelKind) -> TrainConfig {
        match kind {
            ModelKind::Mlp => TrainConfig::mlp(),
            _ => TrainConfig::linear(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::validation(format!(
                "warmup_fraction must be in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::validation(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NaiveBayes,
    Logistic,
    Svm,
    Mlp,
    Forest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::NaiveBayes,
        ModelKind::Logistic,
        ModelKind::Svm,
        ModelKind::Mlp,
        ModelKind::Forest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "nb",
            ModelKind::Logistic => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
            ModelKind::Forest => "forest",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::NaiveBayes => 1,
            ModelKind::Logistic => 2,
            ModelKind::Svm => 3,
            ModelKind::Mlp => 4,
            ModelKind::Forest => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Whether the model's outputs are probabilities rather than margins
    /// pushed through a softmax.
    pub fn is_calibrated(self) -> bool {
        self != ModelKind::Svm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "nb" | "naive-bayes" | "naivebayes" => Ok(ModelKind::NaiveBayes),
            "logreg" | "logistic" | "lr" | "softmax" => Ok(ModelKind::Logistic),
            "svm" | "linear-svm" => Ok(ModelKind::Svm),
            "mlp" | "nn" | "neural" => Ok(ModelKind::Mlp),
            "forest" | "rf" | "random-forest" => Ok(ModelKind::Forest),
            _ => Err(Error::validation(format!(
                "unknown model {s:?} (expected nb, logreg, svm, mlp or forest)"
            ))),
        }
    }
}

/// Count vectors with gold labels over a `dim`-wide index space. Indices
/// below `reserved` belong to special tokens and carry no evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    pub vectors: Vec<CountVector>,
    pub labels: Vec<Genre>,
    pub dim: usize,
    pub reserved: usize,
}

impl VectorSet {
    pub fn new(vectors: Vec<CountVector>, labels: Vec<Genre>, dim: usize) -> Result<VectorSet> {
        VectorSet::with_reserved(vectors, labels, dim, SPECIAL_TOKENS.len().min(dim))
    }

    pub fn with_reserved(
        vectors: Vec<CountVector>,
        labels: Vec<Genre>,
        dim: usize,
        reserved: usize,
    ) -> Result<VectorSet> {
        if vectors.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                actual: labels.len(),
            });
        }
        if reserved > dim {
            return Err(Error::validation("reserved width exceeds dimension"));
        }
        for v in &vectors {
            check_dim(v, dim)?;
        }
        Ok(VectorSet {
            vectors,
            labels,
            dim,
            reserved,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub sequences: Vec<TokenSequence>,
    pub labels: Vec<Genre>,
    pub vocab_size: usize,
}

impl SequenceSet {
    pub fn new(sequences: Vec<TokenSequence>, labels: Vec<Genre>, vocab_size: usize) -> Result<SequenceSet> {
        if sequences.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: sequences.len(),
                actual: labels.len(),
            });
        }
        if let Some(first) = sequences.first() {
            let len = first.max_len();
            if let Some(bad) = sequences.iter().find(|s| s.max_len() != len) {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    actual: bad.max_len(),
                });
            }
        }
        for s in &sequences {
            check_ids(s.ids(), vocab_size)?;
        }
        Ok(SequenceSet {
            sequences,
            labels,
            vocab_size,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

pub(crate) fn check_dim(v: &CountVector, dim: usize) -> Result<()> {
    match v.max_index() {
        Some(i) if i as usize >= dim => Err(Error::DimensionMismatch {
            expected: dim,
            actual: i as usize + 1,
        }),
        _ => Ok(()),
    }
}

pub(crate) fn check_ids(ids: &[u32], vocab_size: usize) -> Result<()> {
    match ids.iter().max() {
        Some(&i) if i as usize >= vocab_size => Err(Error::DimensionMismatch {
            expected: vocab_size,
            actual: i as usize + 1,
        }),
        _ => Ok(()),
    }
}

/// Softmax over arbitrary finite scores, shifted by the maximum.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `scores` against class `gold`, via log-sum-exp.
pub(crate) fn cross_entropy(scores: &[f64], gold: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[gold]
}

/// Argmax over the nine genre scores; ties go to the lowest genre id.
pub fn predict_genre(scores: &[f64]) -> Result<Genre> {
    if scores.len() != GENRE_COUNT {
        return Err(Error::DimensionMismatch {
            expected: GENRE_COUNT,
            actual: scores.len(),
        });
    }
    if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::validation(format!("score {k} is not finite: {}", scores[k])));
    }
    let mut best = 0;
    for k in 1..GENRE_COUNT {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Ok(Genre::from_index(best))
}

/// A trained model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    NaiveBayes(NaiveBayesModel),
    Linear(LinearModel),
    Mlp(MlpModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::NaiveBayes(_) => ModelKind::NaiveBayes,
            Model::Linear(m) => match m.kind() {
                LinearKind::SoftmaxRegression => ModelKind::Logistic,
                LinearKind::OvrHinge => ModelKind::Svm,
            },
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Forest(_) => ModelKind::Forest,
        }
    }
}
