//! Data loading and the model-building steps shared by several subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use folio_core::analytics::{daily_returns, risk_stats, ReturnMatrix, RiskStats};
use folio_core::backtest::{allocate, allocate_long_only, Allocation, PriceMap};
use folio_core::config::RunConfig;
use folio_core::eigen::{eigen_report, EigenReport};
use folio_core::forecaster::{
    fit_windows_dated, load_checkpoint, save_checkpoint, train, write_history_csv, LstmModel,
    TrainHistory,
};
use folio_core::frontier::{sample_portfolios, FrontierCloud, PortfolioWeights, SamplingConfig};
use folio_core::market_data::{
    build_panel_field, load_dir, load_ohlcv_csv, OhlcvSeries, PricePanel,
};
use folio_core::{Error, Result};

pub fn load_panel(cfg: &RunConfig) -> Result<PricePanel> {
    let tickers = cfg.require_tickers()?;
    let series = load_dir(&cfg.data_dir, tickers)?;
    build_panel_field(&series, cfg.align, cfg.price_field)
}

pub struct Estimates {
    pub returns: ReturnMatrix,
    pub stats: RiskStats,
}

/// Returns and risk statistics over the training span.
pub fn estimates(cfg: &RunConfig, panel: &PricePanel) -> Result<Estimates> {
    let train = panel.slice(cfg.train_start, cfg.train_end)?;
    let returns = daily_returns(&train)?;
    let stats = risk_stats(&returns, cfg.trading_days)?;
    Ok(Estimates { returns, stats })
}

pub fn frontier(cfg: &RunConfig, stats: &RiskStats) -> Result<FrontierCloud> {
    sample_portfolios(
        stats,
        &SamplingConfig {
            sample_count: cfg.sample_count,
            seed: cfg.seed,
            risk_free: cfg.risk_free,
        },
    )
}

pub fn eigen(cfg: &RunConfig, est: &Estimates) -> Result<EigenReport> {
    eigen_report(&est.returns, &est.stats, cfg.n_components, cfg.risk_free)
}

/// Buy on the first trading day of the evaluation span, value on its last.
#[derive(Debug, Clone, Copy)]
pub struct EvalWindow {
    pub buy: usize,
    pub eval: usize,
}

impl EvalWindow {
    pub fn find(cfg: &RunConfig, panel: &PricePanel) -> Result<Self> {
        let buy = panel.first_on_or_after(cfg.eval_start);
        let eval = panel.last_on_or_before(cfg.eval_end);
        match (buy, eval) {
            (Some(b), Some(e)) if b <= e => Ok(Self { buy: b, eval: e }),
            _ => Err(Error::Insufficient(format!(
                "no trading days between {} and {}",
                cfg.eval_start, cfg.eval_end
            ))),
        }
    }

    pub fn buy_date(&self, panel: &PricePanel) -> NaiveDate {
        panel.dates()[self.buy]
    }

    pub fn eval_date(&self, panel: &PricePanel) -> NaiveDate {
        panel.dates()[self.eval]
    }
}

pub fn prices_at(panel: &PricePanel, row: usize) -> PriceMap {
    panel
        .tickers()
        .iter()
        .cloned()
        .zip(panel.closes().row(row).iter().copied())
        .collect()
}

pub fn allocate_for(
    cfg: &RunConfig,
    weights: &PortfolioWeights,
    prices: &PriceMap,
) -> Result<Allocation> {
    if cfg.long_only {
        allocate_long_only(weights, cfg.capital, prices)
    } else {
        allocate(weights, cfg.capital, prices)
    }
}

/// Closes strictly before `row`, per ticker: the history a one-day-ahead
/// forecast for that row may use.
pub fn histories_before(panel: &PricePanel, row: usize) -> BTreeMap<String, Vec<f64>> {
    panel
        .tickers()
        .iter()
        .enumerate()
        .map(|(c, t)| {
            let col: Vec<f64> = (0..row).map(|r| panel.closes()[(r, c)]).collect();
            (t.clone(), col)
        })
        .collect()
}

pub fn load_series(cfg: &RunConfig, ticker: &str) -> Result<OhlcvSeries> {
    if !cfg.data_dir.is_dir() {
        return Err(Error::io(
            &cfg.data_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    load_ohlcv_csv(cfg.data_dir.join(format!("{ticker}.csv")))
}

/// Per-ticker weight-init seed, stable across ticker order.
fn ticker_seed(seed: u64, ticker: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in ticker.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

pub fn train_ticker(cfg: &RunConfig, series: &OhlcvSeries) -> Result<(LstmModel, TrainHistory)> {
    let (dates, closes): (Vec<NaiveDate>, Vec<f64>) = series
        .rows
        .iter()
        .filter(|r| r.date >= cfg.train_start && r.date <= cfg.train_end)
        .map(|r| (r.date, r.field(cfg.price_field)))
        .unzip();
    let (data, scaler) = fit_windows_dated(&dates, &closes, cfg.model.window)?;
    let model = LstmModel::new(cfg.model, ticker_seed(cfg.seed, &series.ticker))?;
    let (mut model, history) = train(model, &data, &cfg.train)?;
    model.scaler = Some(scaler);
    Ok((model, history))
}

pub fn model_path(models_dir: &Path, ticker: &str) -> PathBuf {
    models_dir.join(format!("{ticker}.json"))
}

pub fn history_path(models_dir: &Path, ticker: &str) -> PathBuf {
    models_dir.join(format!("{ticker}_history.csv"))
}

pub fn save_trained(
    cfg: &RunConfig,
    models_dir: &Path,
    ticker: &str,
    model: &LstmModel,
    history: &TrainHistory,
) -> Result<PathBuf> {
    std::fs::create_dir_all(models_dir).map_err(|e| Error::io(models_dir, e))?;
    let path = model_path(models_dir, ticker);
    save_checkpoint(model, Some(ticker), Some(&cfg.train), &path)?;
    write_history_csv(history, history_path(models_dir, ticker))?;
    Ok(path)
}

pub fn load_model(path: &Path) -> Result<LstmModel> {
    Ok(load_checkpoint(path)?.model)
}

/// Loads every ticker's checkpoint from `models_dir`; with `train_missing`,
/// trains and saves the ones that are absent.
pub fn models_for(
    cfg: &RunConfig,
    models_dir: &Path,
    train_missing: bool,
) -> Result<BTreeMap<String, LstmModel>> {
    let mut out = BTreeMap::new();
    for t in cfg.require_tickers()? {
        let path = model_path(models_dir, t);
        let model = if path.is_file() {
            load_model(&path)?
        } else if train_missing {
            let (m, h) = train_ticker(cfg, &load_series(cfg, t)?)?;
            save_trained(cfg, models_dir, t, &m, &h)?;
            eprintln!("trained {t} -> {}", path.display());
            m
        } else {
            return Err(Error::Missing {
                what: "model checkpoint",
                ticker: t.clone(),
            });
        };
        out.insert(t.clone(), model);
    }
    Ok(out)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
