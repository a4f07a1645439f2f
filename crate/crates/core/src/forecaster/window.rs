use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::scaler::MinMaxScaler;
use crate::{Error, Result};

/// Sliding windows of scaled closes, each paired with the scaled close that
/// follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub window: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Position of each target in the source series.
    pub target_index: Vec<usize>,
    /// Calendar date of each target, when the source carried dates.
    pub target_dates: Vec<NaiveDate>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Chronological split: the last `fraction` of samples become the
    /// validation set.
    pub fn split_tail(&self, fraction: f64) -> Result<(WindowedDataset, WindowedDataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Invalid(format!(
                "validation fraction {fraction} not in [0, 1)"
            )));
        }
        let n_val = ((self.len() as f64) * fraction).round() as usize;
        let cut = self.len() - n_val;
        if cut == 0 {
            return Err(Error::Insufficient(
                "validation split leaves no training data".into(),
            ));
        }
        let part = |r: std::ops::Range<usize>| WindowedDataset {
            window: self.window,
            inputs: self.inputs[r.clone()].to_vec(),
            targets: self.targets[r.clone()].to_vec(),
            target_index: self.target_index[r.clone()].to_vec(),
            target_dates: if self.target_dates.is_empty() {
                Vec::new()
            } else {
                self.target_dates[r].to_vec()
            },
        };
        Ok((part(0..cut), part(cut..self.len())))
    }
}

pub fn make_windows(
    closes: &[f64],
    window: usize,
    scaler: &MinMaxScaler,
) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::Invalid("window must be positive".into()));
    }
    if closes.len() <= window {
        return Err(Error::Insufficient(format!(
            "series of {} closes is too short for window {window}",
            closes.len()
        )));
    }
    let scaled: Vec<f64> = closes.iter().map(|&c| scaler.scale(c)).collect();
    let n = closes.len() - window;
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for k in 0..n {
        inputs.push(scaled[k..k + window].to_vec());
        targets.push(scaled[k + window]);
    }
    Ok(WindowedDataset {
        window,
        inputs,
        targets,
        target_index: (window..closes.len()).collect(),
        target_dates: Vec::new(),
    })
}

/// Fits the scaler on `closes` and windows them.
pub fn fit_windows(closes: &[f64], window: usize) -> Result<(WindowedDataset, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(closes)?;
    Ok((make_windows(closes, window, &scaler)?, scaler))
}

pub fn fit_windows_dated(
    dates: &[NaiveDate],
    closes: &[f64],
    window: usize,
) -> Result<(WindowedDataset, MinMaxScaler)> {
    if dates.len() != closes.len() {
        return Err(Error::Invalid("dates and closes differ in length".into()));
    }
    let (mut ds, scaler) = fit_windows(closes, window)?;
    ds.target_dates = ds.target_index.iter().map(|&i| dates[i]).collect();
    Ok((ds, scaler))
}
