//! Sector portfolio toolkit.
//!
//! The pipeline runs from per-ticker daily close prices to three kinds of
//! allocation per sector (minimum variance, maximum Sharpe, eigen), a
//! two-layer LSTM next-day close forecaster, and a buy-and-hold backtest
//! that compares realised and forecast portfolio value.
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod backtest;
pub mod config;
pub mod eigen;
pub mod error;
pub mod fixture;
pub mod forecaster;
pub mod frontier;
pub mod market_data;
pub mod matrix;
pub mod rng;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
