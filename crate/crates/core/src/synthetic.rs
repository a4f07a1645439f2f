//! Seeded synthetic market: one common factor plus idiosyncratic noise,
//! compounded into weekday closes.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::market_data::{OhlcvRow, OhlcvSeries};
use crate::rng::{self, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub tickers: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    /// Correlation of every asset with the common factor, in `[0, 1)`.
    pub factor_loading: f64,
}

impl SyntheticMarket {
    pub fn new(n_tickers: usize, start: NaiveDate, end: NaiveDate, seed: u64) -> Self {
        Self {
            tickers: (1..=n_tickers).map(|i| format!("SYN{i:02}")).collect(),
            start,
            end,
            seed,
            factor_loading: 0.75,
        }
    }

    pub fn trading_days(&self) -> Vec<NaiveDate> {
        let mut out = Vec::new();
        let mut d = self.start;
        while d <= self.end {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                out.push(d);
            }
            d = d + Days::new(1);
        }
        out
    }

    pub fn generate(&self) -> Result<Vec<OhlcvSeries>> {
        if self.tickers.is_empty() {
            return Err(Error::Invalid(
                "synthetic market needs at least one ticker".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.factor_loading) {
            return Err(Error::Invalid("factor_loading must be in [0, 1)".into()));
        }
        let days = self.trading_days();
        let k = self.tickers.len();
        // Per-asset drift, volatility and starting price spread deterministically.
        let drift: Vec<f64> = (0..k).map(|i| 0.0001 + 0.00008 * i as f64).collect();
        let vol: Vec<f64> = (0..k).map(|i| 0.011 + 0.0015 * (i % 5) as f64).collect();
        let start: Vec<f64> = (0..k).map(|i| 80.0 * (1.0 + i as f64 * 0.7)).collect();
        let rho = self.factor_loading;
        let idio = (1.0 - rho * rho).sqrt();

        let mut closes = start.clone();
        let mut series: Vec<OhlcvSeries> = self
            .tickers
            .iter()
            .map(|t| OhlcvSeries {
                ticker: t.clone(),
                rows: Vec::with_capacity(days.len()),
            })
            .collect();
        for (t, &date) in days.iter().enumerate() {
            let mut rng = rng::stream(self.seed, Domain::Synthetic, t as u64);
            let market: f64 = rng.sample(StandardNormal);
            for i in 0..k {
                let noise: f64 = rng.sample(StandardNormal);
                let open = closes[i];
                if t > 0 {
                    let r = drift[i] + vol[i] * (rho * market + idio * noise);
                    closes[i] *= 1.0 + r;
                }
                let close = closes[i];
                let spread: f64 = 1.0 + 0.004 * rng.random::<f64>();
                series[i].rows.push(OhlcvRow {
                    date,
                    open,
                    high: open.max(close) * spread,
                    low: open.min(close) / spread,
                    close,
                    adj_close: close,
                    volume: 100_000 + rng.random_range(0..900_000u64),
                });
            }
        }
        Ok(series)
    }
}
