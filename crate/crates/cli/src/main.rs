//! `folio`: sector portfolio construction, forecasting and backtesting.

mod commands;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use folio_core::config::RunConfig;
use folio_core::{Error, ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(
    name = "folio",
    version,
    about = "Sector portfolio construction, forecasting and backtesting"
)]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random stream; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Price directory; overrides the config.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    /// Any config key, as `key=value`. Repeatable; applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsSource {
    Optrisk,
    Eigen,
    Fixture,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Daily and annualised return statistics over the training span.
    Stats,
    /// Monte-Carlo frontier cloud with its minimum-variance and max-Sharpe points.
    Frontier,
    /// Principal-component portfolios and the best one by Sharpe ratio.
    Eigen,
    /// Train the forecaster for one ticker.
    Train {
        #[arg(long)]
        ticker: String,
    },
    /// Walk-forward predictions over the evaluation span plus the next close.
    Predict {
        #[arg(long)]
        ticker: String,
        /// Checkpoint to use; defaults to `<out>/models/<ticker>.json`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Buy-and-hold backtest of one weight vector.
    Backtest {
        #[arg(long, value_enum)]
        weights_source: WeightsSource,
        /// Sector fixture JSON, for `--weights-source fixture`.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Checkpoint directory; adds a forecast-priced report when given.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Summary table across sectors plus per-portfolio plot data.
    Report {
        /// Directory of sector fixtures to summarise.
        #[arg(long, conflicts_with = "outcomes")]
        fixtures: Option<PathBuf>,
        /// Sector-outcome JSON files written by `backtest --weights-source fixture`.
        #[arg(long, num_args = 1..)]
        outcomes: Vec<PathBuf>,
        /// Checkpoint directory for the data-driven report; missing models are trained.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.train.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli)?;
    match cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::Frontier => commands::frontier(&cfg),
        Command::Eigen => commands::eigen(&cfg),
        Command::Train { ticker } => commands::train(&cfg, &ticker),
        Command::Predict { ticker, model } => commands::predict(&cfg, &ticker, model.as_deref()),
        Command::Backtest {
            weights_source,
            fixture,
            models,
        } => commands::backtest(&cfg, weights_source, fixture.as_deref(), models.as_deref()),
        Command::Report {
            fixtures,
            outcomes,
            models,
        } => commands::report(&cfg, fixtures.as_deref(), &outcomes, models.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
