//! Next-day close forecasting with a from-scratch two-layer LSTM.

mod checkpoint;
mod gradcheck;
mod lstm;
mod scaler;
mod train;
mod window;

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use gradcheck::{finite_difference_grads, max_relative_error};
pub use lstm::{DropoutMasks, ForwardCache, LstmLayerParams, LstmModel, Mode, ModelConfig, Params};
pub use scaler::MinMaxScaler;
pub use train::{evaluate, train, Adam, EpochStats, TrainConfig, TrainHistory};
pub use window::{fit_windows, fit_windows_dated, make_windows, WindowedDataset};

use crate::{Error, Result};

/// `½e²` inside `|e| ≤ δ`, `δ(|e| − ½δ)` outside, with `e = pred − target`.
pub fn huber_loss(pred: f64, target: f64, delta: f64) -> f64 {
    let e = pred - target;
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

/// Derivative of the Huber loss with respect to the prediction.
pub fn huber_grad(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e
    } else {
        delta * e.signum()
    }
}

/// Anything that turns a trailing close history into a next-day close.
pub trait Forecaster {
    fn predict_next(&self, history: &[f64]) -> Result<f64>;
}

impl Forecaster for LstmModel {
    fn predict_next(&self, history: &[f64]) -> Result<f64> {
        let w = self.config.window;
        if history.len() < w {
            return Err(Error::Insufficient(format!(
                "need {w} closes of history, got {}",
                history.len()
            )));
        }
        predict_next_close(self, &history[history.len() - w..])
    }
}

/// A forecaster that always answers the same price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedForecast(pub f64);

impl Forecaster for FixedForecast {
    fn predict_next(&self, _history: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// Scales `closes`, runs inference and maps the output back to a price.
pub fn predict_next_close(model: &LstmModel, closes: &[f64]) -> Result<f64> {
    let scaler = model
        .scaler
        .ok_or_else(|| Error::Invalid("model has no fitted scaler".into()))?;
    if closes.len() != model.config.window {
        return Err(Error::Invalid(format!(
            "expected exactly {} closes, got {}",
            model.config.window,
            closes.len()
        )));
    }
    let input: Vec<f64> = closes.iter().map(|&c| scaler.scale(c)).collect();
    let price = scaler.inverse(model.predict_scaled(&input)?);
    if !price.is_finite() {
        return Err(Error::Numerical("non-finite price prediction".into()));
    }
    Ok(price)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardPoint {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

/// One-day-ahead predictions for every trading day in `[start, end]`, each
/// from the actual closes immediately preceding it.
pub fn walk_forward(
    model: &impl Forecaster,
    window: usize,
    dates: &[NaiveDate],
    closes: &[f64],
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Vec<WalkForwardPoint>> {
    if dates.len() != closes.len() {
        return Err(Error::Invalid("dates and closes differ in length".into()));
    }
    let lo = dates.partition_point(|d| *d < start);
    let hi = dates.partition_point(|d| *d <= end);
    if lo >= hi {
        return Err(Error::Insufficient(format!(
            "no trading days between {start} and {end}"
        )));
    }
    if lo < window {
        return Err(Error::Insufficient(format!(
            "{start} has {lo} prior trading days, need {window}"
        )));
    }
    (lo..hi)
        .map(|i| {
            Ok(WalkForwardPoint {
                date: dates[i],
                actual: closes[i],
                predicted: model.predict_next(&closes[i - window..i])?,
            })
        })
        .collect()
}

pub fn write_walk_forward_csv(points: &[WalkForwardPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    writeln!(buf, "date,actual,predicted").expect("write to vec");
    for p in points {
        writeln!(
            buf,
            "{},{},{}",
            p.date.format("%Y-%m-%d"),
            p.actual,
            p.predicted
        )
        .expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_history_csv(history: &[EpochStats], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    writeln!(buf, "epoch,loss,mae,val_loss,val_mae").expect("write to vec");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in history {
        writeln!(
            buf,
            "{},{},{},{},{}",
            e.epoch,
            e.loss,
            e.mae,
            opt(e.val_loss),
            opt(e.val_mae)
        )
        .expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
