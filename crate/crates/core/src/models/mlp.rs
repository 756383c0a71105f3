use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_ids, cross_entropy, sgd, softmax, SequenceSet, TrainConfig, TrainLog};
use crate::error::{Error, Result};
use crate::features::{TokenSequence, PAD_ID};
use crate::genre::GENRE_COUNT;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            embed_dim: 64,
            hidden: vec![128],
        }
    }
}

/// Mean of non-padding token embeddings, then rectified dense layers, then
/// nine logits. All parameters live in one flat vector: the embedding
/// table (vocab × d), then for each layer its weights (out × in, row-major)
/// followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    vocab_size: usize,
    embed_dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
}

struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Range<usize>,
    bias: Range<usize>,
}

impl MlpModel {
    /// Unit-scale random embeddings, Glorot hidden weights, zero output layer
    /// and biases.
    pub fn init(vocab_size: usize, cfg: &MlpConfig, seed: u64) -> Result<MlpModel> {
        if vocab_size == 0 || cfg.embed_dim == 0 || cfg.hidden.contains(&0) {
            return Err(Error::validation(
                "vocabulary, embedding and hidden sizes must be positive",
            ));
        }
        let mut m = MlpModel {
            vocab_size,
            embed_dim: cfg.embed_dim,
            hidden: cfg.hidden.clone(),
            params: Vec::new(),
        };
        let layers = m.layers();
        m.params = vec![0.0; layers.last().map_or(m.embedding_len(), |l| l.bias.end)];
        let mut rng = stream(seed, Domain::Init, 0);
        let emb = m.embedding_len();
        for p in &mut m.params[..emb] {
            *p = rng.random_range(-1.0..1.0);
        }
        let n = layers.len();
        for l in &layers[..n - 1] {
            let bound = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            for p in &mut m.params[l.weights.clone()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(m)
    }

    pub fn train(data: &SequenceSet, mlp: &MlpConfig, cfg: &TrainConfig) -> Result<(MlpModel, TrainLog)> {
        if data.is_empty() {
            return Err(Error::validation("cannot train on an empty set"));
        }
        let mut model = MlpModel::init(data.vocab_size, mlp, cfg.seed)?;
        let decayed: Vec<Range<usize>> = std::iter::once(0..model.embedding_len())
            .chain(model.layers().into_iter().map(|l| l.weights))
            .collect();
        let mut params = std::mem::take(&mut model.params);
        let empty = data
            .sequences
            .iter()
            .filter(|s| s.content().iter().all(|&i| i == PAD_ID))
            .count();
        if empty > 0 {
            log::warn!("{empty} training sequences have no tokens and will predict uniformly");
        }
        let log = {
            let shape = model.clone();
            sgd::run(data.len(), cfg, &mut params, &decayed, |p, batch| {
                shape.batch_loss_grad(p, data, batch)
            })?
        };
        model.params = params;
        Ok((model, log))
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
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

    /// Zeroes the output layer weights and biases.
    pub fn zero_output(&mut self) {
        let layers = self.layers();
        let last = layers.last().expect("at least one layer");
        self.params[last.weights.start..last.bias.end].fill(0.0);
    }

    fn embedding_len(&self) -> usize {
        self.vocab_size * self.embed_dim
    }

    fn layers(&self) -> Vec<Layer> {
        let mut dims = vec![self.embed_dim];
        dims.extend(&self.hidden);
        dims.push(GENRE_COUNT);
        let mut offset = self.embedding_len();
        dims.windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let weights = offset..offset + inputs * outputs;
                let bias = weights.end..weights.end + outputs;
                offset = bias.end;
                Layer {
                    inputs,
                    outputs,
                    weights,
                    bias,
                }
            })
            .collect()
    }

    pub fn logits(&self, ids: &[u32]) -> Result<Vec<f64>> {
        check_ids(ids, self.vocab_size)?;
        Ok(self.forward(&self.params, ids).0.pop().expect("output layer"))
    }

    pub fn predict_proba(&self, seq: &TokenSequence) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(seq.ids())?))
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to
    /// [`params`](Self::params).
    pub fn loss_and_grad(&self, data: &SequenceSet, batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        if data.vocab_size != self.vocab_size {
            return Err(Error::DimensionMismatch {
                expected: self.vocab_size,
                actual: data.vocab_size,
            });
        }
        Ok(self.batch_loss_grad(&self.params, data, batch))
    }

    /// Activations per stage: index 0 is the pooled embedding, the last is
    /// the logits; hidden entries are post-rectifier.
    fn forward(&self, params: &[f64], ids: &[u32]) -> (Vec<Vec<f64>>, usize) {
        let d = self.embed_dim;
        let mut pooled = vec![0.0; d];
        let mut count = 0usize;
        for &id in ids.iter().filter(|&&i| i != PAD_ID) {
            let row = &params[id as usize * d..(id as usize + 1) * d];
            for (a, e) in pooled.iter_mut().zip(row) {
                *a += e;
            }
            count += 1;
        }
        if count > 0 {
            for a in &mut pooled {
                *a /= count as f64;
            }
        }
        let layers = self.layers();
        let mut acts = vec![pooled];
        for (k, l) in layers.iter().enumerate() {
            let input = acts.last().expect("non-empty");
            let w = &params[l.weights.clone()];
            let b = &params[l.bias.clone()];
            let mut out: Vec<f64> = (0..l.outputs)
                .map(|o| {
                    b[o] + w[o * l.inputs..(o + 1) * l.inputs]
                        .iter()
                        .zip(input)
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                })
                .collect();
            if k + 1 < layers.len() {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        (acts, count)
    }

    fn batch_loss_grad(&self, params: &[f64], data: &SequenceSet, batch: &[usize]) -> (f64, Vec<f64>) {
        let layers = self.layers();
        let d = self.embed_dim;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for &k in batch {
            let ids = data.sequences[k].ids();
            let gold = data.labels[k].index();
            let (acts, count) = self.forward(params, ids);
            let logits = acts.last().expect("logits");
            let p = softmax(logits);
            loss += cross_entropy(logits, gold);
            let mut delta: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(c, pc)| pc - if c == gold { 1.0 } else { 0.0 })
                .collect();
            for (k, l) in layers.iter().enumerate().rev() {
                let input = &acts[k];
                for o in 0..l.outputs {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    let row = l.weights.start + o * l.inputs;
                    for (i, x) in input.iter().enumerate() {
                        grad[row + i] += delta[o] * x;
                    }
                    grad[l.bias.start + o] += delta[o];
                }
                let w = &params[l.weights.clone()];
                let mut back = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    for (i, b) in back.iter_mut().enumerate() {
                        *b += w[o * l.inputs + i] * delta[o];
                    }
                }
                if k > 0 {
                    // Rectifier derivative; activations are post-max so a
                    // positive value marks an active unit.
                    for (b, a) in back.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *b = 0.0;
                        }
                    }
                }
                delta = back;
            }
            if count > 0 {
                let share = 1.0 / count as f64;
                for &id in ids.iter().filter(|&&i| i != PAD_ID) {
                    let row = id as usize * d;
                    for (j, g) in delta.iter().enumerate() {
                        grad[row + j] += g * share;
                    }
                }
            }
        }
        let m = batch.len().max(1) as f64;
        for g in &mut grad {
            *g /= m;
        }
        (loss / m, grad)
    }

    pub(crate) fn to_parts(&self) -> (Vec<u64>, Vec<f64>) {
        let mut shape = vec![self.embed_dim as u64];
        shape.extend(self.hidden.iter().map(|&h| h as u64));
        (shape, self.params.clone())
    }

    pub(crate) fn from_parts(vocab_size: usize, shape: &[u64], params: &[f64]) -> Result<MlpModel> {
        let Some((&d, hidden)) = shape.split_first() else {
            return Err(Error::ModelFile("neural model shape is empty".into()));
        };
        let mut m = MlpModel {
            vocab_size,
            embed_dim: d as usize,
            hidden: hidden.iter().map(|&h| h as usize).collect(),
            params: Vec::new(),
        };
        let expected = m.layers().last().map_or(0, |l| l.bias.end);
        if params.len() != expected {
            return Err(Error::ModelFile(format!(
                "neural model expects {expected} parameters, found {}",
                params.len()
            )));
        }
        m.params = params.to_vec();
        Ok(m)
    }
}
