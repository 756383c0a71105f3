//! Mini-batch gradient descent shared by the linear and neural models.

use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Per-step learning rates and per-epoch mean training loss.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rates: Vec<f64>,
    pub epoch_loss: Vec<f64>,
}

/// Rate at 1-based `step` of `total`: linear ramp to `peak` over the first
/// `warmup` steps, then linear decay reaching 0 at `total`.
pub fn learning_rate_at(step: usize, total: usize, warmup: usize, peak: f64) -> f64 {
    if warmup > 0 && step <= warmup {
        peak * step as f64 / warmup as f64
    } else if total > warmup {
        peak * (total - step) as f64 / (total - warmup) as f64
    } else {
        0.0
    }
}

pub(crate) fn steps_per_epoch(n: usize, batch: usize) -> usize {
    n.div_ceil(batch)
}

/// Runs `cfg.epochs` shuffled passes over `n` examples. `batch_grad` maps the
/// current parameters and a batch of example indices to (mean loss,
/// gradient). Parameters inside `decayed` also shrink by `rate·decay` each
/// step.
pub(crate) fn run<F>(
    n: usize,
    cfg: &TrainConfig,
    params: &mut [f64],
    decayed: &[Range<usize>],
    mut batch_grad: F,
) -> Result<TrainLog>
where
    F: FnMut(&[f64], &[usize]) -> (f64, Vec<f64>),
{
    cfg.validate()?;
    let per_epoch = steps_per_epoch(n, cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let warmup = (cfg.warmup_fraction * total as f64).floor() as usize;
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(cfg.seed, Domain::EpochShuffle, epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            step += 1;
            let rate = learning_rate_at(step, total, warmup, cfg.learning_rate);
            let (loss, grad) = batch_grad(params, batch);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { step, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            if cfg.weight_decay > 0.0 {
                let shrink = rate * cfg.weight_decay;
                for r in decayed {
                    for p in &mut params[r.clone()] {
                        *p -= shrink * *p;
                    }
                }
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= rate * g;
            }
            log.rates.push(rate);
        }
        log.epoch_loss.push(if n > 0 { epoch_loss / n as f64 } else { 0.0 });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        // 10 steps, 2 warmup.
        let r: Vec<f64> = (1..=10).map(|s| learning_rate_at(s, 10, 2, 1.0)).collect();
        assert_eq!(r[0], 0.5);
        assert_eq!(r[1], 1.0);
        assert_eq!(r[2], 7.0 / 8.0);
        assert_eq!(r[9], 0.0);
        // No warmup: decay starts at the first step.
        assert_eq!(learning_rate_at(1, 4, 0, 1.0), 0.75);
    }

    #[test]
    fn rate_log_matches_schedule() {
        let cfg = TrainConfig {
            learning_rate: 0.4,
            batch_size: 3,
            epochs: 5,
            warmup_fraction: 0.2,
            weight_decay: 0.0,
            seed: 1,
        };
        let mut params = vec![0.0];
        let log = run(10, &cfg, &mut params, &[], |_, b| (0.0, vec![b.len() as f64])).unwrap();
        assert_eq!(log.rates.len(), 20);
        for (k, r) in log.rates.iter().enumerate() {
            assert_eq!(*r, learning_rate_at(k + 1, 20, 4, 0.4));
        }
    }

    #[test]
    fn diverging_loss_aborts() {
        let cfg = TrainConfig::linear();
        let mut params = vec![0.0];
        let err = run(4, &cfg, &mut params, &[], |_, _| (f64::INFINITY, vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { step: 1, .. }));
    }
}
