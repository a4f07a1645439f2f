use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use folio_core::backtest::{
    predicted_report, summary, valuate, write_summary_csv, BacktestReport, SectorOutcome,
    SummaryRow,
};
use folio_core::config::RunConfig;
use folio_core::fixture::{load_fixture_dir, SectorFixture};
use folio_core::forecaster::{predict_next_close, walk_forward, write_walk_forward_csv, LstmModel};
use folio_core::frontier::{export_frontier, PortfolioWeights};
use folio_core::market_data::PricePanel;
use folio_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::pipeline::{self, EvalWindow};
use crate::WeightsSource;

pub fn stats(cfg: &RunConfig) -> Result<()> {
    let panel = pipeline::load_panel(cfg)?;
    let est = pipeline::estimates(cfg, &panel)?;
    let path = cfg.output_dir.join("stats.json");
    pipeline::write_json(&est.stats, &path)?;
    println!("{}", serde_json::to_string_pretty(&est.stats)?);
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn frontier(cfg: &RunConfig) -> Result<()> {
    let panel = pipeline::load_panel(cfg)?;
    let est = pipeline::estimates(cfg, &panel)?;
    let cloud = pipeline::frontier(cfg, &est.stats)?;
    pipeline::ensure_dir(&cfg.output_dir)?;
    let csv = cfg.output_dir.join("frontier.csv");
    let sidecar = export_frontier(&cloud, &csv)?;
    let lo = &cloud.points[cloud.min_variance];
    let hi = &cloud.points[cloud.max_sharpe];
    println!(
        "{} portfolios; min variance #{} risk {:.6} return {:.6}; max sharpe #{} sharpe {:.6}",
        cloud.len(),
        cloud.min_variance,
        lo.risk_annual,
        lo.ret_annual,
        cloud.max_sharpe,
        hi.sharpe
    );
    eprintln!("wrote {} and {}", csv.display(), sidecar.display());
    Ok(())
}

pub fn eigen(cfg: &RunConfig) -> Result<()> {
    let panel = pipeline::load_panel(cfg)?;
    let est = pipeline::estimates(cfg, &panel)?;
    let report = pipeline::eigen(cfg, &est)?;
    let path = cfg.output_dir.join("eigen.json");
    pipeline::write_json(&report, &path)?;
    for s in &report.skipped {
        eprintln!(
            "warning: component {} skipped: {}",
            s.component_index, s.reason
        );
    }
    println!(
        "{} components explain {:.4} of variance; selected component {} sharpe {:.6}",
        report.explained_variance_ratio.len(),
        report.cumulative_explained,
        report.selected.component_index,
        report.selected.sharpe
    );
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn train(cfg: &RunConfig, ticker: &str) -> Result<()> {
    let series = pipeline::load_series(cfg, ticker)?;
    let (model, history) = pipeline::train_ticker(cfg, &series)?;
    let dir = cfg.output_dir.join("models");
    let path = pipeline::save_trained(cfg, &dir, ticker, &model, &history)?;
    if let Some(last) = history.last() {
        println!(
            "{ticker}: {} epochs, final loss {:.6e} mae {:.6e}",
            history.len(),
            last.loss,
            last.mae
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct NextClose {
    ticker: String,
    last_date: NaiveDate,
    next_close: f64,
    walk_forward_days: usize,
}

pub fn predict(cfg: &RunConfig, ticker: &str, model: Option<&Path>) -> Result<()> {
    let default = pipeline::model_path(&cfg.output_dir.join("models"), ticker);
    let model = pipeline::load_model(model.unwrap_or(&default))?;
    let series = pipeline::load_series(cfg, ticker)?;
    let dates = series.dates();
    let closes: Vec<f64> = series
        .rows
        .iter()
        .map(|r| r.field(cfg.price_field))
        .collect();
    let w = model.config.window;
    let points = walk_forward(&model, w, &dates, &closes, cfg.eval_start, cfg.eval_end)?;
    let path = cfg
        .output_dir
        .join("predictions")
        .join(format!("{ticker}.csv"));
    pipeline::ensure_dir(path.parent().expect("joined path"))?;
    write_walk_forward_csv(&points, &path)?;

    let end = dates.partition_point(|d| *d <= cfg.eval_end);
    if end < w {
        return Err(Error::Insufficient(format!(
            "{ticker}: fewer than {w} closes up to {}",
            cfg.eval_end
        )));
    }
    let next = NextClose {
        ticker: ticker.to_string(),
        last_date: dates[end - 1],
        next_close: predict_next_close(&model, &closes[end - w..end])?,
        walk_forward_days: points.len(),
    };
    println!("{}", serde_json::to_string_pretty(&next)?);
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Backtest of config-derived weights on the panel's evaluation span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRun {
    pub sector: String,
    pub weights_source: String,
    pub buy_date: NaiveDate,
    pub eval_date: NaiveDate,
    pub actual: BacktestReport,
    pub predicted: Option<BacktestReport>,
}

fn predicted_from_models(
    panel: &PricePanel,
    window: EvalWindow,
    alloc: &folio_core::backtest::Allocation,
    models: &BTreeMap<String, LstmModel>,
) -> Result<BacktestReport> {
    predicted_report(
        alloc,
        models,
        &pipeline::histories_before(panel, window.eval),
    )
}

pub fn backtest(
    cfg: &RunConfig,
    source: WeightsSource,
    fixture: Option<&Path>,
    models: Option<&Path>,
) -> Result<()> {
    if source == WeightsSource::Fixture {
        let path = fixture.ok_or_else(|| {
            Error::Config("--weights-source fixture needs --fixture <file>".into())
        })?;
        let outcome = SectorFixture::load(path)?.run()?;
        let out = cfg
            .output_dir
            .join(format!("backtest_{}.json", slug(&outcome.sector)));
        pipeline::write_json(&outcome, &out)?;
        print_outcome(&outcome);
        eprintln!("wrote {}", out.display());
        return Ok(());
    }

    let panel = pipeline::load_panel(cfg)?;
    let est = pipeline::estimates(cfg, &panel)?;
    let weights = match source {
        WeightsSource::Optrisk => {
            let cloud = pipeline::frontier(cfg, &est.stats)?;
            cloud.points[cloud.max_sharpe].weights.clone()
        }
        _ => pipeline::eigen(cfg, &est)?.selected.weights,
    };
    let window = EvalWindow::find(cfg, &panel)?;
    let alloc = pipeline::allocate_for(cfg, &weights, &pipeline::prices_at(&panel, window.buy))?;
    let actual = valuate(&alloc, &pipeline::prices_at(&panel, window.eval))?;
    let predicted = match models {
        Some(dir) => Some(predicted_from_models(
            &panel,
            window,
            &alloc,
            &pipeline::models_for(cfg, dir, false)?,
        )?),
        None => None,
    };
    let name = match source {
        WeightsSource::Optrisk => "optrisk",
        _ => "eigen",
    };
    let run = BacktestRun {
        sector: cfg.sector.clone(),
        weights_source: name.into(),
        buy_date: window.buy_date(&panel),
        eval_date: window.eval_date(&panel),
        actual,
        predicted,
    };
    let out = cfg.output_dir.join(format!("backtest_{name}.json"));
    pipeline::write_json(&run, &out)?;
    println!(
        "{} {name}: bought {} valued {} total {:.2} roi {:.2}%",
        run.sector, run.buy_date, run.eval_date, run.actual.total, run.actual.roi_percent
    );
    if let Some(p) = &run.predicted {
        println!(
            "  forecast-priced total {:.2} roi {:.2}%",
            p.total, p.roi_percent
        );
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn print_outcome(o: &SectorOutcome) {
    println!(
        "{}: optimum-risk {:.2} ({:.2}%), eigen {:.2} ({:.2}%), predicted {:.2} ({:.2}%)",
        o.sector,
        o.opt_risk.total,
        o.opt_risk.roi_percent,
        o.eigen.total,
        o.eigen.roi_percent,
        o.predicted.total,
        o.predicted.roi_percent
    );
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// One row per holding, the columns of a portfolio table.
fn write_table_csv(r: &BacktestReport, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(
        buf,
        "ticker,weight,invested,buy_price,shares,eval_price,value"
    )
    .expect("write to vec");
    for (p, h) in r.allocation.positions.iter().zip(&r.holdings) {
        writeln!(
            buf,
            "{},{},{},{},{},{},{}",
            p.ticker, p.weight, p.invested, p.buy_price, p.shares, h.eval_price, h.value
        )
        .expect("write to vec");
    }
    writeln!(buf, "total,,{},,,,{}", r.allocation.capital, r.total).expect("write to vec");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_outcome_files(o: &SectorOutcome, dir: &Path) -> Result<()> {
    let s = slug(&o.sector);
    pipeline::write_json(o, &dir.join(format!("{s}.json")))?;
    for (name, r) in [
        ("optrisk", &o.opt_risk),
        ("eigen", &o.eigen),
        ("predicted", &o.predicted),
    ] {
        write_table_csv(r, &dir.join(format!("{s}_{name}.csv")))?;
    }
    Ok(())
}

fn outcome_from_data(cfg: &RunConfig, models_dir: &Path, plot_dir: &Path) -> Result<SectorOutcome> {
    let panel = pipeline::load_panel(cfg)?;
    let est = pipeline::estimates(cfg, &panel)?;
    let cloud = pipeline::frontier(cfg, &est.stats)?;
    let eigen = pipeline::eigen(cfg, &est)?;
    let window = EvalWindow::find(cfg, &panel)?;
    let buy = pipeline::prices_at(&panel, window.buy);
    let eval = pipeline::prices_at(&panel, window.eval);
    let opt_weights: &PortfolioWeights = &cloud.points[cloud.max_sharpe].weights;
    let opt_alloc = pipeline::allocate_for(cfg, opt_weights, &buy)?;
    let eigen_alloc = pipeline::allocate_for(cfg, &eigen.selected.weights, &buy)?;
    let models = pipeline::models_for(cfg, models_dir, true)?;

    let s = slug(&cfg.sector);
    export_frontier(&cloud, plot_dir.join(format!("{s}_frontier.csv")))?;
    let dates = panel.dates();
    for (c, t) in panel.tickers().iter().enumerate() {
        let closes: Vec<f64> = (0..panel.len()).map(|r| panel.closes()[(r, c)]).collect();
        let m = &models[t];
        let pts = walk_forward(
            m,
            m.config.window,
            dates,
            &closes,
            cfg.eval_start,
            cfg.eval_end,
        )?;
        write_walk_forward_csv(&pts, plot_dir.join(format!("{s}_{t}_walk_forward.csv")))?;
    }
    Ok(SectorOutcome {
        sector: cfg.sector.clone(),
        opt_risk: valuate(&opt_alloc, &eval)?,
        eigen: valuate(&eigen_alloc, &eval)?,
        predicted: predicted_from_models(&panel, window, &opt_alloc, &models)?,
    })
}

pub fn report(
    cfg: &RunConfig,
    fixtures: Option<&Path>,
    outcome_files: &[std::path::PathBuf],
    models: Option<&Path>,
) -> Result<()> {
    let plot_dir = cfg.output_dir.join("report");
    pipeline::ensure_dir(&plot_dir)?;
    let outcomes: Vec<SectorOutcome> = if let Some(dir) = fixtures {
        load_fixture_dir(dir)?
            .iter()
            .map(SectorFixture::run)
            .collect::<Result<_>>()?
    } else if !outcome_files.is_empty() {
        outcome_files
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(serde_json::from_str(&text)?)
            })
            .collect::<Result<_>>()?
    } else {
        let default = cfg.output_dir.join("models");
        vec![outcome_from_data(
            cfg,
            models.unwrap_or(&default),
            &plot_dir,
        )?]
    };
    for o in &outcomes {
        write_outcome_files(o, &plot_dir)?;
    }
    let rows: Vec<SummaryRow> = summary(&outcomes);
    let path = cfg.output_dir.join("summary.csv");
    write_summary_csv(&rows, &path)?;
    println!(
        "{:<28} {:>10} {:>10} {:>10}",
        "portfolio", "opt %", "eigen %", "lstm %"
    );
    for r in &rows {
        println!(
            "{:<28} {:>10.2} {:>10.2} {:>10.2}",
            r.sector, r.opt_roi, r.eigen_roi, r.predicted_roi
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}
