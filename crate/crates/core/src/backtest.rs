//! Buy-and-hold evaluation of a weight vector: allocate capital on a buy
//! date, value the holdings at realised or forecast prices, report ROI.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::forecaster::Forecaster;
use crate::frontier::PortfolioWeights;
use crate::{Error, Result};

pub type PriceMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub ticker: String,
    pub weight: f64,
    pub invested: f64,
    pub buy_price: f64,
    /// Fractional; negative for short positions.
    pub shares: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub capital: f64,
    pub positions: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holding {
    pub ticker: String,
    pub shares: f64,
    pub eval_price: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub allocation: Allocation,
    pub holdings: Vec<Holding>,
    pub total: f64,
    pub roi_percent: f64,
}

impl BacktestReport {
    pub fn eval_prices(&self) -> PriceMap {
        self.holdings
            .iter()
            .map(|h| (h.ticker.clone(), h.eval_price))
            .collect()
    }
}

pub fn roi_percent(total: f64, capital: f64) -> f64 {
    (total - capital) / capital * 100.0
}

fn price_of(prices: &PriceMap, ticker: &str, what: &'static str) -> Result<f64> {
    let p = *prices.get(ticker).ok_or_else(|| Error::Missing {
        what,
        ticker: ticker.to_string(),
    })?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Invalid(format!(
            "{what} for {ticker} is {p}; must be positive"
        )));
    }
    Ok(p)
}

/// `invested = weight · capital`, `shares = invested / buy_price`. Negative
/// weights open short positions with the same arithmetic.
pub fn allocate(
    weights: &PortfolioWeights,
    capital: f64,
    buy_prices: &PriceMap,
) -> Result<Allocation> {
    if !(capital.is_finite() && capital > 0.0) {
        return Err(Error::Invalid(format!(
            "capital must be positive, got {capital}"
        )));
    }
    let positions = weights
        .tickers
        .iter()
        .zip(&weights.weights)
        .map(|(t, &w)| {
            let buy_price = price_of(buy_prices, t, "buy price")?;
            let invested = w * capital;
            Ok(Position {
                ticker: t.clone(),
                weight: w,
                invested,
                buy_price,
                shares: invested / buy_price,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Allocation { capital, positions })
}

/// [`allocate`] that rejects short positions.
pub fn allocate_long_only(
    weights: &PortfolioWeights,
    capital: f64,
    buy_prices: &PriceMap,
) -> Result<Allocation> {
    if let Some((t, w)) = weights
        .tickers
        .iter()
        .zip(&weights.weights)
        .find(|(_, w)| **w < 0.0)
    {
        return Err(Error::Invalid(format!(
            "negative weight {w} for {t} in a long-only run"
        )));
    }
    allocate(weights, capital, buy_prices)
}

pub fn valuate(allocation: &Allocation, eval_prices: &PriceMap) -> Result<BacktestReport> {
    let holdings: Vec<Holding> = allocation
        .positions
        .iter()
        .map(|p| {
            let eval_price = price_of(eval_prices, &p.ticker, "evaluation price")?;
            Ok(Holding {
                ticker: p.ticker.clone(),
                shares: p.shares,
                eval_price,
                value: p.shares * eval_price,
            })
        })
        .collect::<Result<_>>()?;
    let total: f64 = holdings.iter().map(|h| h.value).sum();
    Ok(BacktestReport {
        allocation: allocation.clone(),
        holdings,
        roi_percent: roi_percent(total, allocation.capital),
        total,
    })
}

/// Values the allocation at each ticker's forecast close.
pub fn predicted_report<F: Forecaster>(
    allocation: &Allocation,
    models: &BTreeMap<String, F>,
    histories: &BTreeMap<String, Vec<f64>>,
) -> Result<BacktestReport> {
    let mut prices = PriceMap::new();
    for p in &allocation.positions {
        let model = models.get(&p.ticker).ok_or_else(|| Error::Missing {
            what: "forecast model",
            ticker: p.ticker.clone(),
        })?;
        let history = histories.get(&p.ticker).ok_or_else(|| Error::Missing {
            what: "price history",
            ticker: p.ticker.clone(),
        })?;
        prices.insert(p.ticker.clone(), model.predict_next(history)?);
    }
    valuate(allocation, &prices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sector: String,
    pub opt_roi: f64,
    pub eigen_roi: f64,
    pub predicted_roi: f64,
}

/// The three backtests run for one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorOutcome {
    pub sector: String,
    pub opt_risk: BacktestReport,
    pub eigen: BacktestReport,
    pub predicted: BacktestReport,
}

pub fn summary(outcomes: &[SectorOutcome]) -> Vec<SummaryRow> {
    outcomes
        .iter()
        .map(|o| SummaryRow {
            sector: o.sector.clone(),
            opt_roi: o.opt_risk.roi_percent,
            eigen_roi: o.eigen.roi_percent,
            predicted_roi: o.predicted.roi_percent,
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "portfolio,opt_portfolio_return_pct,eigen_portfolio_return_pct,lstm_predicted_return_pct";

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    writeln!(buf, "{SUMMARY_HEADER}").expect("write to vec");
    for r in rows {
        writeln!(
            buf,
            "{},{},{},{}",
            r.sector, r.opt_roi, r.eigen_roi, r.predicted_roi
        )
        .expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: "unexpected summary header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Parse {
                path: path.into(),
                line: i as u64 + 2,
                message: format!("bad summary row {line:?}"),
            };
            let f: Vec<&str> = line.rsplitn(4, ',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(SummaryRow {
                sector: f[3].to_string(),
                opt_roi: num(f[2])?,
                eigen_roi: num(f[1])?,
                predicted_roi: num(f[0])?,
            })
        })
        .collect()
}
