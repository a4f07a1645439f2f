//! Daily simple returns and annualised risk statistics.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::market_data::PricePanel;
use crate::matrix::Matrix;
use crate::{Error, Result};

pub const TRADING_DAYS: usize = 250;

/// `returns[(t, i)] = close[t+1][i] / close[t][i] - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMatrix {
    pub tickers: Vec<String>,
    /// Date of the later close in each pair.
    pub dates: Vec<NaiveDate>,
    pub returns: Matrix,
}

impl ReturnMatrix {
    pub fn len(&self) -> usize {
        self.returns.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.rows() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskStats {
    pub tickers: Vec<String>,
    pub trading_days: usize,
    pub mean_daily: Vec<f64>,
    pub mean_annual: Vec<f64>,
    pub vol_daily: Vec<f64>,
    pub vol_annual: Vec<f64>,
    pub cov_daily: Matrix,
    pub cov_annual: Matrix,
}

pub fn daily_returns(panel: &PricePanel) -> Result<ReturnMatrix> {
    if panel.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 dates for returns, panel has {}",
            panel.len()
        )));
    }
    let closes = panel.closes();
    let (rows, cols) = (closes.rows() - 1, closes.cols());
    let mut returns = Matrix::zeros(rows, cols);
    for t in 0..rows {
        for i in 0..cols {
            returns[(t, i)] = closes[(t + 1, i)] / closes[(t, i)] - 1.0;
        }
    }
    Ok(ReturnMatrix {
        tickers: panel.tickers().to_vec(),
        dates: panel.dates()[1..].to_vec(),
        returns,
    })
}

pub fn column_means(m: &Matrix) -> Vec<f64> {
    let n = m.rows() as f64;
    (0..m.cols())
        .map(|c| m.column(c).sum::<f64>() / n)
        .collect()
}

/// Sample (n-1) covariance of the columns of `m`.
pub fn sample_covariance(m: &Matrix) -> Matrix {
    let n = m.rows();
    let k = m.cols();
    let means = column_means(m);
    let mut cov = Matrix::zeros(k, k);
    for t in 0..n {
        let row = m.row(t);
        for i in 0..k {
            let di = row[i] - means[i];
            for j in i..k {
                cov[(i, j)] += di * (row[j] - means[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..k {
        for j in i..k {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

pub fn risk_stats(returns: &ReturnMatrix, trading_days: usize) -> Result<RiskStats> {
    if returns.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 return rows, got {}",
            returns.len()
        )));
    }
    if trading_days == 0 {
        return Err(Error::Invalid("trading_days must be positive".into()));
    }
    let days = trading_days as f64;
    let mean_daily = column_means(&returns.returns);
    let cov_daily = sample_covariance(&returns.returns);
    let k = cov_daily.rows();
    let vol_daily: Vec<f64> = (0..k).map(|i| cov_daily[(i, i)].sqrt()).collect();
    let mut cov_annual = cov_daily.clone();
    cov_annual
        .as_mut_slice()
        .iter_mut()
        .for_each(|v| *v *= days);
    Ok(RiskStats {
        tickers: returns.tickers.clone(),
        trading_days,
        mean_annual: mean_daily.iter().map(|m| m * days).collect(),
        vol_annual: vol_daily.iter().map(|v| v * days.sqrt()).collect(),
        mean_daily,
        vol_daily,
        cov_daily,
        cov_annual,
    })
}
