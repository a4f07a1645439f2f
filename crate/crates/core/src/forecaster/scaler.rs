use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Min-max scaling onto `[0, 1]` fitted on training closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Invalid(format!(
                "scaler requires min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    /// A constant series gets a symmetric band of 1% of its magnitude
    /// (at least 0.01) so that `min < max` holds.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Insufficient("cannot fit a scaler on no data".into()));
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Invalid("non-finite value in scaler input".into()));
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let pad = lo.abs().max(1.0) * 1e-2;
            return Self::new(lo - pad, hi + pad);
        }
        Self::new(lo, hi)
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_and_round_trip() {
        let s = MinMaxScaler::fit(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max), (1.0, 3.0));
        assert_eq!(s.scale(2.0), 0.5);
        assert_eq!(s.inverse(0.5), 2.0);
    }

    #[test]
    fn inverse_arithmetic() {
        let s = MinMaxScaler::new(100.0, 300.0).unwrap();
        assert_eq!(s.inverse(0.5), 200.0);
    }

    #[test]
    fn constant_series_is_padded() {
        let s = MinMaxScaler::fit(&[50.0; 10]).unwrap();
        assert!(s.min < 50.0 && s.max > 50.0);
        assert!((s.scale(50.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_bounds() {
        assert!(MinMaxScaler::new(1.0, 1.0).is_err());
        assert!(MinMaxScaler::fit(&[]).is_err());
    }
}
