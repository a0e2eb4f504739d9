//! Adam training with linear warmup and a reduce-on-plateau schedule.

use ndarray::{Array2, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, TrainConfig};
use crate::model::{Example, ModelError, Pass, Transducer};
use crate::ops::{cast, Float};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no training examples")]
    NoData,
    #[error("loss became {loss} at epoch {epoch}, step {step}")]
    Divergence { epoch: usize, step: usize, loss: f64 },
}

/// Adam with β₁ = 0.9, β₂ = 0.98, ε = 1e-9.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Array2<T>>,
    v: Vec<Array2<T>>,
}

impl<T: Float> Adam<T> {
    pub fn new(params: &[Array2<T>]) -> Adam<T> {
        Adam {
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-9,
            t: 0,
            m: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [Array2<T>], grads: &[Array2<T>], lr: f64) {
        self.t += 1;
        let (b1, b2) = (cast::<T>(self.beta1), cast::<T>(self.beta2));
        let (one, eps) = (T::one(), cast::<T>(self.eps));
        let c1 = cast::<T>(1.0 - self.beta1.powi(self.t));
        let c2 = cast::<T>(1.0 - self.beta2.powi(self.t));
        let lr = cast::<T>(lr);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *p -= lr * mhat / (num_traits::Float::sqrt(vhat) + eps);
            });
        }
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// a new best dev loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    scale: f64,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize) -> PlateauScheduler {
        PlateauScheduler {
            factor,
            patience,
            scale: 1.0,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records an epoch's dev loss; returns true when the rate was cut.
    pub fn observe(&mut self, dev_loss: f64) -> bool {
        if dev_loss < self.best {
            self.best = dev_loss;
            self.stale = 0;
            return false;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            self.scale *= self.factor;
            self.stale = 0;
            return true;
        }
        false
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    /// Learning rate in effect at the end of the epoch.
    pub lr: f64,
}

fn to_f64<T: Float>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

fn refs(examples: &[Example]) -> Vec<(&[usize], &[usize])> {
    examples.iter().map(|e| (e.src.as_slice(), e.tgt.as_slice())).collect()
}

/// Token-weighted mean loss over `examples` without dropout.
pub fn mean_loss<T: Float>(model: &Transducer<T>, examples: &[Example], batch: usize) -> Result<f64, ModelError> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for chunk in examples.chunks(batch.max(1)) {
        let n: usize = chunk.iter().map(|e| e.tgt.len() + 1).sum();
        total += to_f64(model.loss(&refs(chunk), &mut Pass::eval())?) * n as f64;
        tokens += n;
    }
    Ok(if tokens == 0 { 0.0 } else { total / tokens as f64 })
}

/// Trains in place for `cfg.max_epochs` epochs and returns one log entry per
/// epoch. `on_epoch` sees each entry as it is produced.
pub fn train<T: Float>(
    model: &mut Transducer<T>,
    train_set: &[Example],
    dev_set: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::NoData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.params());
    let mut plateau = PlateauScheduler::new(cfg.plateau_factor, cfg.plateau_patience_epochs);
    let steps_per_epoch = train_set.len().div_ceil(cfg.batch_size);
    let warmup_steps = cfg.warmup_epochs * steps_per_epoch;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0usize;
    let mut log = Vec::with_capacity(cfg.max_epochs);
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut tokens = 0usize;
        let mut lr = cfg.lr * plateau.scale();
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<Example> = idx.iter().map(|&i| train_set[i].clone()).collect();
            let (loss, grads) = model.loss_and_grad(
                &refs(&batch),
                &mut Pass {
                    rng: Some(&mut rng),
                    causal: true,
                },
            )?;
            let loss = to_f64(loss);
            if !loss.is_finite() {
                return Err(TrainError::Divergence { epoch, step, loss });
            }
            let n: usize = batch.iter().map(|e| e.tgt.len() + 1).sum();
            total += loss * n as f64;
            tokens += n;
            let warm = if step < warmup_steps {
                (step + 1) as f64 / warmup_steps as f64
            } else {
                1.0
            };
            lr = cfg.lr * plateau.scale() * warm;
            adam.step(model.params_mut(), &grads, lr);
            step += 1;
        }
        let dev_loss = if dev_set.is_empty() {
            f64::NAN
        } else {
            mean_loss(model, dev_set, cfg.batch_size)?
        };
        let train_loss = total / tokens.max(1) as f64;
        let monitored = if dev_set.is_empty() { train_loss } else { dev_loss };
        if step >= warmup_steps {
            plateau.observe(monitored);
        }
        let entry = EpochLog {
            epoch,
            train_loss,
            dev_loss,
            lr,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_halves_after_patience() {
        let mut s = PlateauScheduler::new(0.5, 3);
        assert!(!s.observe(1.0));
        assert!(!s.observe(1.0));
        assert!(!s.observe(1.2));
        assert!(s.observe(1.1));
        assert_eq!(s.scale(), 0.5);
        assert!(!s.observe(0.9));
        assert_eq!(s.scale(), 0.5);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = vec![Array2::from_elem((1, 2), 1.0f64)];
        let g = vec![ndarray::array![[0.5, -2.0]]];
        let mut adam = Adam::new(&p);
        adam.step(&mut p, &g, 0.1);
        assert!((p[0][[0, 0]] - 0.9).abs() < 1e-6);
        assert!((p[0][[0, 1]] - 1.1).abs() < 1e-6);
    }
}
