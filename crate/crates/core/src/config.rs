//! Run configuration: a `key = value` text file, overridable per key.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::forecaster::{ModelConfig, TrainConfig};
use crate::market_data::{AlignPolicy, PriceField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sector: String,
    pub data_dir: PathBuf,
    pub tickers: Vec<String>,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
    pub sample_count: usize,
    pub seed: u64,
    pub risk_free: f64,
    pub capital: f64,
    pub output_dir: PathBuf,
    pub trading_days: usize,
    pub n_components: usize,
    pub align: AlignPolicy,
    pub price_field: PriceField,
    pub long_only: bool,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sector: "sector".into(),
            data_dir: PathBuf::from("data"),
            tickers: Vec::new(),
            train_start: date(2016, 1, 1),
            train_end: date(2020, 12, 31),
            eval_start: date(2021, 1, 1),
            eval_end: date(2021, 8, 3),
            sample_count: crate::frontier::DEFAULT_SAMPLES,
            seed: 42,
            risk_free: crate::frontier::DEFAULT_RISK_FREE,
            capital: 100_000.0,
            output_dir: PathBuf::from("out"),
            trading_days: crate::analytics::TRADING_DAYS,
            n_components: crate::eigen::DEFAULT_COMPONENTS,
            align: AlignPolicy::Intersect,
            price_field: PriceField::Close,
            long_only: false,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean {value:?} for {key}"
        ))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    /// Loads a config file; relative `data_dir`/`output_dir` resolve against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            if cfg.data_dir.is_relative() {
                cfg.data_dir = base.join(&cfg.data_dir);
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sector" => self.sector = value.to_string(),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "tickers" => {
                self.tickers = value
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            "train_start" => self.train_start = parse_value(key, value)?,
            "train_end" => self.train_end = parse_value(key, value)?,
            "eval_start" => self.eval_start = parse_value(key, value)?,
            "eval_end" => self.eval_end = parse_value(key, value)?,
            "sample_count" => self.sample_count = parse_value(key, value)?,
            "seed" => {
                self.seed = parse_value(key, value)?;
                self.train.seed = self.seed;
            }
            "risk_free" => self.risk_free = parse_value(key, value)?,
            "capital" => self.capital = parse_value(key, value)?,
            "trading_days" => self.trading_days = parse_value(key, value)?,
            "n_components" => self.n_components = parse_value(key, value)?,
            "align" => self.align = value.parse()?,
            "price_field" => self.price_field = value.parse()?,
            "long_only" => self.long_only = parse_bool(key, value)?,
            "window" => self.model.window = parse_value(key, value)?,
            "hidden_dim" => self.model.hidden_dim = parse_value(key, value)?,
            "dense_dim" => self.model.dense_dim = parse_value(key, value)?,
            "dropout_rate" => self.model.dropout_rate = parse_value(key, value)?,
            "batch_size" => self.train.batch_size = parse_value(key, value)?,
            "epochs" => self.train.epochs = parse_value(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_value(key, value)?,
            "huber_delta" => self.train.huber_delta = parse_value(key, value)?,
            "validation_split" => self.train.validation_split = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_start > self.train_end || self.eval_start > self.eval_end {
            return Err(Error::Config(
                "date spans must start before they end".into(),
            ));
        }
        if self.train_end >= self.eval_start {
            return Err(Error::Config(format!(
                "train span (ends {}) must precede eval span (starts {})",
                self.train_end, self.eval_start
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("sample_count must be at least 1".into()));
        }
        if !(self.capital > 0.0) {
            return Err(Error::Config("capital must be positive".into()));
        }
        if self.trading_days == 0 {
            return Err(Error::Config("trading_days must be positive".into()));
        }
        self.model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn require_tickers(&self) -> Result<&[String]> {
        if self.tickers.is_empty() {
            return Err(Error::Config("no tickers configured".into()));
        }
        Ok(&self.tickers)
    }
}
