//! Browser bindings: a frontier cloud and an eigen spectrum on a seeded
//! synthetic market, and the bundled sector backtests.
//!
//! Each export returns a JSON string; `www/index.html` draws them.

use chrono::NaiveDate;
use folio_core::analytics::{daily_returns, risk_stats, ReturnMatrix, RiskStats};
use folio_core::eigen::eigen_report;
use folio_core::fixture::bundled;
use folio_core::frontier::{sample_portfolios, SamplingConfig};
use folio_core::market_data::{build_panel, AlignPolicy};
use folio_core::synthetic::SyntheticMarket;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_ASSETS: usize = 30;
const MAX_SAMPLES: usize = 50_000;

fn market(
    n_assets: usize,
    factor_loading: f64,
    seed: u64,
) -> Result<(ReturnMatrix, RiskStats), String> {
    if n_assets == 0 || n_assets > MAX_ASSETS {
        return Err(format!("asset count must be 1..={MAX_ASSETS}"));
    }
    let mut m = SyntheticMarket::new(
        n_assets,
        NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
        NaiveDate::from_ymd_opt(2020, 12, 31).expect("valid date"),
        seed,
    );
    m.factor_loading = factor_loading;
    let series = m.generate().map_err(|e| e.to_string())?;
    let panel = build_panel(&series, AlignPolicy::Intersect).map_err(|e| e.to_string())?;
    let returns = daily_returns(&panel).map_err(|e| e.to_string())?;
    let stats =
        risk_stats(&returns, folio_core::analytics::TRADING_DAYS).map_err(|e| e.to_string())?;
    Ok((returns, stats))
}

#[derive(Serialize)]
struct Special {
    index: usize,
    risk: f64,
    ret: f64,
    sharpe: f64,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct CloudView {
    tickers: Vec<String>,
    /// `[risk, return, sharpe]` per sample.
    points: Vec<[f64; 3]>,
    min_variance: Special,
    max_sharpe: Special,
}

pub fn frontier_json(
    n_assets: usize,
    factor_loading: f64,
    seed: u64,
    sample_count: usize,
    risk_free: f64,
) -> Result<String, String> {
    if sample_count == 0 || sample_count > MAX_SAMPLES {
        return Err(format!("sample count must be 1..={MAX_SAMPLES}"));
    }
    let (_, stats) = market(n_assets, factor_loading, seed)?;
    let cloud = sample_portfolios(
        &stats,
        &SamplingConfig {
            sample_count,
            seed,
            risk_free,
        },
    )
    .map_err(|e| e.to_string())?;
    let special = |i: usize| {
        let p = &cloud.points[i];
        Special {
            index: i,
            risk: p.risk_annual,
            ret: p.ret_annual,
            sharpe: p.sharpe,
            weights: p.weights.weights.clone(),
        }
    };
    let view = CloudView {
        tickers: stats.tickers.clone(),
        points: cloud
            .points
            .iter()
            .map(|p| [p.risk_annual, p.ret_annual, p.sharpe])
            .collect(),
        min_variance: special(cloud.min_variance),
        max_sharpe: special(cloud.max_sharpe),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn eigen_json(
    n_assets: usize,
    factor_loading: f64,
    seed: u64,
    n_components: usize,
) -> Result<String, String> {
    let (returns, stats) = market(n_assets, factor_loading, seed)?;
    let report = eigen_report(
        &returns,
        &stats,
        n_components,
        folio_core::frontier::DEFAULT_RISK_FREE,
    )
    .map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

pub fn sector_backtests_json() -> Result<String, String> {
    let outcomes: Vec<_> = bundled()
        .iter()
        .map(|f| f.run())
        .collect::<folio_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&outcomes).map_err(|e| e.to_string())
}

/// Monte-Carlo frontier cloud on a synthetic market.
#[wasm_bindgen]
pub fn frontier(
    n_assets: usize,
    factor_loading: f64,
    seed: u32,
    sample_count: usize,
    risk_free: f64,
) -> Result<String, JsValue> {
    frontier_json(
        n_assets,
        factor_loading,
        seed as u64,
        sample_count,
        risk_free,
    )
    .map_err(|e| JsValue::from_str(&e))
}

/// Explained variance and eigen portfolios on a synthetic market.
#[wasm_bindgen]
pub fn eigen(
    n_assets: usize,
    factor_loading: f64,
    seed: u32,
    n_components: usize,
) -> Result<String, JsValue> {
    eigen_json(n_assets, factor_loading, seed as u64, n_components)
        .map_err(|e| JsValue::from_str(&e))
}

/// The five bundled sector backtests.
#[wasm_bindgen]
pub fn sector_backtests() -> Result<String, JsValue> {
    sector_backtests_json().map_err(|e| JsValue::from_str(&e))
}
