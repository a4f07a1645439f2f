//! Per-sector backtest fixtures: printed weights and prices for a sector,
//! plus the published totals they are expected to reproduce.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::{allocate, predicted_report, valuate, PriceMap, SectorOutcome};
use crate::forecaster::FixedForecast;
use crate::frontier::PortfolioWeights;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedFigures {
    pub opt_total: f64,
    pub opt_roi: f64,
    pub eigen_total: f64,
    pub eigen_roi: f64,
    pub predicted_total: f64,
    pub predicted_roi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorFixture {
    pub sector: String,
    pub capital: f64,
    pub buy_date: NaiveDate,
    pub eval_date: NaiveDate,
    pub tickers: Vec<String>,
    pub opt_risk_weights: Vec<f64>,
    pub eigen_weights: Vec<f64>,
    pub buy_prices: Vec<f64>,
    pub eval_prices: Vec<f64>,
    /// Forecast closes for `eval_date`, injected as fixed forecasters.
    pub predicted_prices: Vec<f64>,
    pub published: Option<PublishedFigures>,
}

impl SectorFixture {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SectorFixture = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let n = self.tickers.len();
        for (name, v) in [
            ("opt_risk_weights", &self.opt_risk_weights),
            ("eigen_weights", &self.eigen_weights),
            ("buy_prices", &self.buy_prices),
            ("eval_prices", &self.eval_prices),
            ("predicted_prices", &self.predicted_prices),
        ] {
            if v.len() != n {
                return Err(Error::Invalid(format!(
                    "{}: {name} has {} entries for {n} tickers",
                    self.sector,
                    v.len()
                )));
            }
        }
        Ok(())
    }

    fn prices(&self, v: &[f64]) -> PriceMap {
        self.tickers
            .iter()
            .cloned()
            .zip(v.iter().copied())
            .collect()
    }

    /// Printed weights rescaled to sum to one; table rounding leaves them a
    /// few 1e-4 off.
    pub fn opt_weights(&self) -> Result<PortfolioWeights> {
        PortfolioWeights::normalized(self.tickers.clone(), self.opt_risk_weights.clone())
    }

    pub fn eigen_weights(&self) -> Result<PortfolioWeights> {
        PortfolioWeights::normalized(self.tickers.clone(), self.eigen_weights.clone())
    }

    pub fn buy_price_map(&self) -> PriceMap {
        self.prices(&self.buy_prices)
    }

    pub fn eval_price_map(&self) -> PriceMap {
        self.prices(&self.eval_prices)
    }

    /// Runs all three backtests; the forecast follows the optimum-risk allocation.
    pub fn run(&self) -> Result<SectorOutcome> {
        let buy = self.buy_price_map();
        let eval = self.eval_price_map();
        let opt_alloc = allocate(&self.opt_weights()?, self.capital, &buy)?;
        let eigen_alloc = allocate(&self.eigen_weights()?, self.capital, &buy)?;
        let stubs: BTreeMap<String, FixedForecast> = self
            .tickers
            .iter()
            .cloned()
            .zip(self.predicted_prices.iter().map(|&p| FixedForecast(p)))
            .collect();
        let histories: BTreeMap<String, Vec<f64>> = self
            .tickers
            .iter()
            .cloned()
            .zip(self.buy_prices.iter().map(|&p| vec![p]))
            .collect();
        Ok(SectorOutcome {
            sector: self.sector.clone(),
            opt_risk: valuate(&opt_alloc, &eval)?,
            eigen: valuate(&eigen_alloc, &eval)?,
            predicted: predicted_report(&opt_alloc, &stubs, &histories)?,
        })
    }
}

/// All `*.json` fixtures in a directory, sorted by file name.
pub fn load_fixture_dir(dir: impl AsRef<Path>) -> Result<Vec<SectorFixture>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Insufficient(format!(
            "no fixtures in {}",
            dir.display()
        )));
    }
    paths.iter().map(SectorFixture::load).collect()
}

/// The five sector fixtures shipped with the crate, in table order.
pub fn bundled() -> Vec<SectorFixture> {
    [
        include_str!("../fixtures/sectors/1_services.json"),
        include_str!("../fixtures/sectors/2_pse.json"),
        include_str!("../fixtures/sectors/3_mnc.json"),
        include_str!("../fixtures/sectors/4_manufacturing.json"),
        include_str!("../fixtures/sectors/5_commodities.json"),
    ]
    .iter()
    .map(|t| SectorFixture::from_json(t).expect("bundled fixture parses"))
    .collect()
}
