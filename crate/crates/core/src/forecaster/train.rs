use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::lstm::{DropoutMasks, LstmModel, Params};
use super::window::WindowedDataset;
use crate::rng::{self, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub huber_delta: f64,
    pub seed: u64,
    /// Chronological tail fraction held out for validation; 0 disables it.
    pub validation_split: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            huber_delta: 1.0,
            seed: 0,
            validation_split: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Invalid(
                "batch_size and epochs must be at least 1".into(),
            ));
        }
        if !(self.huber_delta > 0.0) {
            return Err(Error::Invalid("huber delta must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Invalid("learning rate must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean train-mode Huber loss over the epoch's samples.
    pub loss: f64,
    /// Mean absolute error, scaled units.
    pub mae: f64,
    pub val_loss: Option<f64>,
    pub val_mae: Option<f64>,
}

pub type TrainHistory = Vec<EpochStats>;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Params,
    v: Params,
    step: i32,
}

impl Adam {
    pub fn new(like: &Params) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut Params, grads: &Params, cfg: &TrainConfig) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        let lr = cfg.learning_rate;
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for j in 0..p.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Fixed number of gradient partitions per batch, independent of the thread
/// count, so summation order never changes.
const BATCH_CHUNKS: usize = 8;

fn batch_gradients(
    model: &LstmModel,
    inputs: &[&[f64]],
    targets: &[f64],
    masks: &[DropoutMasks],
    delta: f64,
) -> Result<(f64, f64, Params)> {
    let n = inputs.len();
    let chunk = n.div_ceil(BATCH_CHUNKS).max(1);
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(chunk)
        .map(|s| s..(s + chunk).min(n))
        .collect();
    let run = |r: &std::ops::Range<usize>| -> Result<(f64, f64, Params)> {
        let mut g = model.params.zeros_like();
        let (l, a) =
            model.accumulate_batch(inputs, targets, Some(masks), delta, r.clone(), &mut g)?;
        Ok((l, a, g))
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<Result<(f64, f64, Params)>> = {
        use rayon::prelude::*;
        ranges.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<(f64, f64, Params)>> = ranges.iter().map(run).collect();

    let mut grads = model.params.zeros_like();
    let (mut loss, mut abs_err) = (0.0, 0.0);
    for part in parts {
        let (l, a, g) = part?;
        loss += l;
        abs_err += a;
        grads.add_assign(&g);
    }
    grads.scale(1.0 / n as f64);
    Ok((loss, abs_err, grads))
}

/// Infer-mode mean Huber loss and MAE.
pub fn evaluate(model: &LstmModel, data: &WindowedDataset, delta: f64) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Insufficient("empty dataset".into()));
    }
    let mut loss = 0.0;
    let mut mae = 0.0;
    for (x, &y) in data.inputs.iter().zip(&data.targets) {
        let p = model.predict_scaled(x)?;
        loss += super::huber_loss(p, y, delta);
        mae += (p - y).abs();
    }
    let n = data.len() as f64;
    Ok((loss / n, mae / n))
}

/// Mini-batch Adam over shuffled windows with BPTT gradients.
pub fn train(
    mut model: LstmModel,
    data: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<(LstmModel, TrainHistory)> {
    cfg.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::Insufficient(
            "cannot train on an empty dataset".into(),
        ));
    }
    if data.window != model.config.window {
        return Err(Error::Invalid(format!(
            "dataset window {} differs from model window {}",
            data.window, model.config.window
        )));
    }
    let (train_set, val_set) = if cfg.validation_split > 0.0 {
        let (a, b) = data.split_tail(cfg.validation_split)?;
        (a, (!b.is_empty()).then_some(b))
    } else {
        (data.clone(), None)
    };

    let n = train_set.len();
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(cfg.seed, Domain::Shuffle, epoch as u64));
        let (mut loss_sum, mut abs_sum) = (0.0, 0.0);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = batch
                .iter()
                .map(|&i| train_set.inputs[i].as_slice())
                .collect();
            let targets: Vec<f64> = batch.iter().map(|&i| train_set.targets[i]).collect();
            let masks: Vec<DropoutMasks> = (0..batch.len())
                .map(|k| {
                    let idx = (epoch * n + b * cfg.batch_size + k) as u64;
                    DropoutMasks::sample(
                        &model.config,
                        &mut rng::stream(cfg.seed, Domain::Dropout, idx),
                    )
                })
                .collect();
            let (loss, abs_err, grads) =
                batch_gradients(&model, &inputs, &targets, &masks, cfg.huber_delta).map_err(
                    |e| match e {
                        Error::Numerical(_) => Error::Diverged {
                            epoch,
                            loss: f64::NAN,
                        },
                        other => other,
                    },
                )?;
            if !loss.is_finite() || !grads.all_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss;
            abs_sum += abs_err;
            adam.update(&mut model.params, &grads, cfg);
        }
        let loss = loss_sum / n as f64;
        if !loss.is_finite() || !model.params.all_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        let (val_loss, val_mae) = match &val_set {
            Some(v) => {
                let (l, m) = evaluate(&model, v, cfg.huber_delta)?;
                (Some(l), Some(m))
            }
            None => (None, None),
        };
        history.push(EpochStats {
            epoch,
            loss,
            mae: abs_sum / n as f64,
            val_loss,
            val_mae,
        });
    }
    Ok((model, history))
}
