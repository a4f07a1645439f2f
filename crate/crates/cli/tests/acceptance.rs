//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p folio-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use folio_core::analytics::{daily_returns, risk_stats, ReturnMatrix};
use folio_core::backtest::{read_summary_csv, summary, SectorOutcome};
use folio_core::eigen::{pca_returns, standardize};
use folio_core::fixture::bundled;
use folio_core::forecaster::{
    finite_difference_grads, fit_windows, max_relative_error, train, DropoutMasks, LstmModel, Mode,
    ModelConfig, TrainConfig,
};
use folio_core::frontier::{export_frontier, sample_portfolios, sharpe_ratio, SamplingConfig};
use folio_core::market_data::{build_panel, AlignPolicy};
use folio_core::rng::{self, Domain};
use folio_core::synthetic::SyntheticMarket;

type Check = Result<String, String>;

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn run(
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    f: impl FnOnce() -> Check,
) -> Line {
    let t = Instant::now();
    let res = f();
    let elapsed = t.elapsed();
    let (mut pass, mut detail) = match res {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail = format!("{detail}; took {elapsed:.2?}, budget {b:?}");
        }
    }
    Line {
        id,
        title,
        pass,
        detail,
        elapsed,
    }
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixtures_dir() -> PathBuf {
    manifest().join("../core/fixtures/sectors")
}

fn synthetic_conf() -> PathBuf {
    manifest().join("../../data/synthetic.conf")
}

fn within(total: f64, roi: f64, want_total: f64, want_roi: f64) -> bool {
    ((total - want_total) / want_total).abs() <= 1e-3 && (roi - want_roi).abs() <= 0.05
}

/// (table, target total, target ROI) per sector, in fixture order.
const OPT_TARGETS: [(&str, f64, f64); 5] = [
    ("I", 115564.0, 15.56),
    ("IV", 151679.0, 51.68),
    ("VII", 109854.0, 9.85),
    ("X", 128089.0, 28.09),
    ("XIII", 146488.0, 46.49),
];
const EIGEN_TARGETS: [(&str, f64, f64); 5] = [
    ("II", 118252.0, 18.25),
    ("V", 132666.0, 32.67),
    ("VIII", 126668.0, 26.67),
    ("XI", 155854.0, 55.85),
    ("XIV", 160696.0, 60.70),
];
const PREDICTED_TARGETS: [(&str, f64, f64); 5] = [
    ("III", 114139.0, 14.14),
    ("VI", 147780.0, 47.78),
    ("IX", 107921.0, 7.92),
    ("XII", 125683.0, 25.68),
    ("XV", 143464.0, 43.46),
];

fn compare(
    outcomes: &[SectorOutcome],
    targets: &[(&str, f64, f64)],
    pick: impl Fn(&SectorOutcome) -> (f64, f64),
) -> (Vec<String>, Vec<String>) {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (o, (table, t, r)) in outcomes.iter().zip(targets) {
        let (total, roi) = pick(o);
        let ok = within(total, roi, *t, *r);
        lines.push(format!(
            "{table:>5} {:<20} total {total:>10.1} (want {t}) roi {roi:>6.2} (want {r:.2}) {}",
            o.sector,
            if ok { "ok" } else { "MISMATCH" }
        ));
        if !ok {
            failed.push(table.to_string());
        }
    }
    (lines, failed)
}

fn fixture_tables(outcomes: &[SectorOutcome], print: &mut Vec<String>) -> Check {
    let (a, mut fa) = compare(outcomes, &OPT_TARGETS, |o| {
        (o.opt_risk.total, o.opt_risk.roi_percent)
    });
    let (b, fb) = compare(outcomes, &EIGEN_TARGETS, |o| {
        (o.eigen.total, o.eigen.roi_percent)
    });
    print.extend(a);
    print.extend(b);
    fa.extend(fb);
    if fa.is_empty() {
        Ok("10/10 tables within 0.1% total and 0.05 pt ROI".into())
    } else {
        Err(format!(
            "{}/10 tables within tolerance; mismatched: {}",
            10 - fa.len(),
            fa.join(", ")
        ))
    }
}

fn predicted_tables(outcomes: &[SectorOutcome], print: &mut Vec<String>) -> Check {
    let (a, f) = compare(outcomes, &PREDICTED_TARGETS, |o| {
        (o.predicted.total, o.predicted.roi_percent)
    });
    print.extend(a);
    if f.is_empty() {
        Ok("5/5 predicted totals within tolerance".into())
    } else {
        Err(format!("mismatched: {}", f.join(", ")))
    }
}

fn folio(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_folio"))
        .args(args)
        .output()
        .map_err(|e| format!("spawn folio: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "folio {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out)
}

fn list_json(dir: &Path) -> Vec<PathBuf> {
    std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect()
        })
        .unwrap_or_default()
}

fn summary_parity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = fixtures_dir();
    let a = dir.path().join("from_fixtures");
    folio(&[
        "report",
        "--fixtures",
        fx.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ])?;

    // Route through per-sector backtest reports as well.
    let b = dir.path().join("from_reports");
    let mut outcome_files = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&fx)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    for p in &paths {
        let before: Vec<PathBuf> = list_json(&b);
        folio(&[
            "backtest",
            "--weights-source",
            "fixture",
            "--fixture",
            p.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ])?;
        let new: Vec<PathBuf> = list_json(&b)
            .into_iter()
            .filter(|x| !before.contains(x))
            .collect();
        if new.len() != 1 {
            return Err(format!(
                "backtest of {} wrote {} reports",
                p.display(),
                new.len()
            ));
        }
        outcome_files.push(new[0].to_str().unwrap().to_string());
    }
    let mut args = vec!["report", "--out", b.to_str().unwrap(), "--outcomes"];
    args.extend(outcome_files.iter().map(String::as_str));
    folio(&args)?;

    let expected = summary(
        &bundled()
            .iter()
            .map(|f| f.run().unwrap())
            .collect::<Vec<_>>(),
    );
    for dir in [&a, &b] {
        let rows = read_summary_csv(dir.join("summary.csv")).map_err(|e| e.to_string())?;
        if rows.len() != 5 {
            return Err(format!("{} rows in {}", rows.len(), dir.display()));
        }
        for (got, want) in rows.iter().zip(&expected) {
            let same = got.sector == want.sector
                && got.opt_roi.to_bits() == want.opt_roi.to_bits()
                && got.eigen_roi.to_bits() == want.eigen_roi.to_bits()
                && got.predicted_roi.to_bits() == want.predicted_roi.to_bits();
            if !same {
                return Err(format!("{} differs: {got:?} vs {want:?}", got.sector));
            }
        }
    }
    Ok("5 sectors, summary ROIs bit-identical to the per-sector reports (fixture dir and backtest JSON routes)".into())
}

fn gradient_check() -> Check {
    let cfg = ModelConfig {
        window: 5,
        hidden_dim: 3,
        dense_dim: 4,
        dropout_rate: 0.3,
    };
    let mut model = LstmModel::new(cfg, 2024).map_err(|e| e.to_string())?;
    // Off-zero dense bias: a fully dropped state would otherwise sit exactly on the ReLU kink.
    for (j, b) in model.params.dense_b.iter_mut().enumerate() {
        *b = 0.03 * (j as f64 + 1.0);
    }
    let inputs = [
        vec![0.12, 0.3, 0.55, 0.41, 0.9],
        vec![0.8, 0.62, 0.2, 0.33, 0.05],
        vec![0.5, 0.45, 0.52, 0.6, 0.58],
        vec![0.0, 1.0, 0.25, 0.75, 0.5],
    ];
    let targets = [0.42, 0.1, 0.61, -1.3];
    let masks: Vec<DropoutMasks> = (0..inputs.len())
        .map(|k| DropoutMasks::sample(&cfg, &mut rng::stream(2024, Domain::Dropout, k as u64)))
        .collect();
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let mut worst: f64 = 0.0;
    for m in [None, Some(masks.as_slice())] {
        let (_, _, analytic) = model
            .loss_and_grads(&refs, &targets, m, 1.0)
            .map_err(|e| e.to_string())?;
        let numeric = finite_difference_grads(&model, &refs, &targets, m, 1.0, 1e-5)
            .map_err(|e| e.to_string())?;
        let (rel, ti, j) = max_relative_error(&analytic, &numeric, 1e-6);
        if rel >= 1e-5 {
            return Err(format!(
                "relative error {rel:.2e} at tensor {ti} element {j}"
            ));
        }
        worst = worst.max(rel);
    }
    Ok(format!(
        "{} parameters, max relative error {worst:.2e}",
        model.params.len()
    ))
}

fn overfit_sine() -> Check {
    let closes: Vec<f64> = (0..200)
        .map(|i| (i as f64 * 2.0 * std::f64::consts::PI / 25.0).sin())
        .collect();
    let cfg = ModelConfig {
        window: 10,
        hidden_dim: 8,
        dense_dim: 8,
        dropout_rate: 0.0,
    };
    let (data, _) = fit_windows(&closes, cfg.window).map_err(|e| e.to_string())?;
    let tc = TrainConfig {
        epochs: 500,
        seed: 1,
        ..TrainConfig::default()
    };
    let model = LstmModel::new(cfg, 1).map_err(|e| e.to_string())?;
    let (_, hist) = train(model, &data, &tc).map_err(|e| e.to_string())?;
    let last = hist.last().map(|e| e.loss).unwrap_or(f64::NAN);
    let first_below = hist.iter().position(|e| e.loss < 1e-3);
    if last < 1e-3 {
        Ok(format!(
            "final Huber {last:.2e}; first below 1e-3 at epoch {first_below:?}"
        ))
    } else {
        Err(format!("final Huber {last:.2e} after 500 epochs"))
    }
}

fn shape_contract() -> Check {
    let m = LstmModel::new(ModelConfig::default(), 0).map_err(|e| e.to_string())?;
    let input: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let masks = DropoutMasks::sample(&m.config, &mut rng::stream(0, Domain::Dropout, 0));
    for mode in [Mode::Infer, Mode::Train(&masks)] {
        let shape = m
            .forward(&input, mode)
            .map_err(|e| e.to_string())?
            .layer1_output_shape();
        if shape != (50, 256) {
            return Err(format!("layer-1 output {shape:?}"));
        }
    }
    if m.forward(&input[..49], Mode::Infer).is_ok() {
        return Err("49-step input accepted".into());
    }
    Ok("layer-1 output (50, 256) in infer and train mode; wrong length rejected".into())
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn synthetic_returns(k: usize, seed: u64) -> ReturnMatrix {
    let market = SyntheticMarket::new(k, date(2018, 1, 1), date(2020, 12, 31), seed);
    let panel = build_panel(&market.generate().unwrap(), AlignPolicy::Intersect).unwrap();
    daily_returns(&panel).unwrap()
}

fn frontier_properties() -> Check {
    let returns = synthetic_returns(5, 77);
    let stats = risk_stats(&returns, 250).map_err(|e| e.to_string())?;
    let cfg = SamplingConfig {
        seed: 42,
        ..SamplingConfig::default()
    };
    let cloud = sample_portfolios(&stats, &cfg).map_err(|e| e.to_string())?;
    if cloud.len() != 10_000 {
        return Err(format!("{} samples", cloud.len()));
    }
    let (mut lo, mut hi) = (0, 0);
    for (i, p) in cloud.points.iter().enumerate() {
        let w = &p.weights.weights;
        if w.iter().any(|x| *x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(format!("sample {i} off the simplex"));
        }
        if p.risk_annual < cloud.points[lo].risk_annual {
            lo = i;
        }
        if p.sharpe > cloud.points[hi].sharpe {
            hi = i;
        }
    }
    if (lo, hi) != (cloud.min_variance, cloud.max_sharpe) {
        return Err(format!(
            "scan ({lo}, {hi}) vs cloud ({}, {})",
            cloud.min_variance, cloud.max_sharpe
        ));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let sa = export_frontier(&cloud, &a).map_err(|e| e.to_string())?;
    let again = sample_portfolios(&stats, &cfg).map_err(|e| e.to_string())?;
    let sb = export_frontier(&again, &b).map_err(|e| e.to_string())?;
    let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap()
        && std::fs::read(&sa).unwrap() == std::fs::read(&sb).unwrap();
    if !same {
        return Err("exports differ between identical runs".into());
    }
    Ok(format!(
        "10000 samples on the simplex; min-variance #{lo}, max-Sharpe #{hi} match linear scan; exports byte-identical"
    ))
}

fn pca_oracle() -> Check {
    let returns = synthetic_returns(5, 5);
    let pca = pca_returns(&returns, 5).map_err(|e| e.to_string())?;
    let z = standardize(&returns).map_err(|e| e.to_string())?;
    let (n, k) = z.shape();
    let zm = nalgebra::DMatrix::from_fn(n, k, |r, c| z[(r, c)]);
    let cov = zm.transpose() * &zm / (n as f64 - 1.0);
    let mut oracle: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let eig_err = pca
        .explained_variance
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let c = &pca.components;
    let mut orth_err: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d: f64 = c.row(i).iter().zip(c.row(j)).map(|(x, y)| x * y).sum();
            orth_err = orth_err.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let r = &pca.explained_variance_ratio;
    let monotone = r.windows(2).all(|w| w[0] >= w[1]);
    if eig_err < 1e-9 && orth_err < 1e-9 && monotone {
        Ok(format!("eigenvalue error {eig_err:.1e}, orthonormality error {orth_err:.1e}, ratios non-increasing"))
    } else {
        Err(format!("eigenvalue error {eig_err:.1e}, orthonormality error {orth_err:.1e}, monotone {monotone}"))
    }
}

fn unit_checks() -> Check {
    let mut bad = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-12 {
            bad.push(format!("{name}: {got} vs {want}"));
        }
    };
    check(
        "sharpe(0.15, 0.20)",
        sharpe_ratio(0.15, 0.20, 0.01).unwrap(),
        0.70,
    );
    check(
        "sharpe(0.25, 0.12)",
        sharpe_ratio(0.25, 0.12, 0.01).unwrap(),
        2.0,
    );
    check(
        "sharpe(rf, 0.3)",
        sharpe_ratio(0.01, 0.3, 0.01).unwrap(),
        0.0,
    );
    let one = ReturnMatrix {
        tickers: vec!["A".into()],
        dates: vec![date(2021, 1, 4), date(2021, 1, 5)],
        returns: folio_core::matrix::Matrix::from_rows(&[vec![0.01], vec![-0.01]]).unwrap(),
    };
    let s = risk_stats(&one, 250).unwrap();
    check("mean_daily", s.mean_daily[0], 0.0);
    check("vol_daily", s.vol_daily[0], 0.0002f64.sqrt());
    check(
        "vol_annual",
        s.vol_annual[0],
        0.0002f64.sqrt() * 250f64.sqrt(),
    );
    check("cov_annual", s.cov_annual[(0, 0)], 0.0002 * 250.0);
    if bad.is_empty() {
        Ok("Sharpe arithmetic and sqrt(250) annualisation exact to 1e-12".into())
    } else {
        Err(bad.join("; "))
    }
}

fn smoke() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap().to_string();
    let conf = synthetic_conf();
    let conf = conf.to_str().unwrap();
    let models = dir.path().join("models");
    let models = models.to_str().unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec!["stats"],
        vec!["frontier"],
        vec!["eigen"],
        vec!["train", "--ticker", "SYN01"],
        vec!["predict", "--ticker", "SYN01"],
        vec!["backtest", "--weights-source", "optrisk"],
        vec!["backtest", "--weights-source", "eigen"],
        vec!["report", "--models", models],
    ];
    for s in &steps {
        let mut args = s.clone();
        args.extend(["--config", conf, "--out", &out]);
        folio(&args)?;
    }
    for f in [
        "stats.json",
        "frontier.csv",
        "frontier.json",
        "eigen.json",
        "models/SYN01.json",
        "summary.csv",
    ] {
        if !Path::new(&out).join(f).is_file() {
            return Err(format!("missing output {f}"));
        }
    }
    let rows = read_summary_csv(Path::new(&out).join("summary.csv")).map_err(|e| e.to_string())?;
    if rows.len() != 1 || !rows[0].predicted_roi.is_finite() {
        return Err(format!("unexpected summary {rows:?}"));
    }
    Ok(format!("{} subcommands exited 0", steps.len()))
}

fn main() {
    let fixtures: Vec<SectorOutcome> = bundled()
        .iter()
        .map(|f| f.run().expect("fixture runs"))
        .collect();
    let mut detail1 = Vec::new();
    let mut detail2 = Vec::new();
    let lines = vec![
        run(
            "1",
            "fixture-table reproduction",
            Some(Duration::from_secs(1)),
            || {
                let outcomes: Vec<SectorOutcome> =
                    bundled().iter().map(|f| f.run().unwrap()).collect();
                fixture_tables(&outcomes, &mut detail1)
            },
        ),
        run(
            "2",
            "predicted-return stubs",
            Some(Duration::from_secs(1)),
            || predicted_tables(&fixtures, &mut detail2),
        ),
        run("3", "summary parity", None, summary_parity),
        run(
            "4a",
            "gradient check",
            Some(Duration::from_secs(30)),
            gradient_check,
        ),
        run(
            "4b",
            "overfit sanity",
            Some(Duration::from_secs(120)),
            overfit_sine,
        ),
        run("4c", "shape contract", None, shape_contract),
        run(
            "4d",
            "frontier properties",
            Some(Duration::from_secs(5)),
            frontier_properties,
        ),
        run("4e", "PCA oracle", Some(Duration::from_secs(1)), pca_oracle),
        run("4f", "unit checks", None, unit_checks),
        run(
            "5",
            "end-to-end smoke",
            Some(Duration::from_secs(600)),
            smoke,
        ),
    ];

    for l in &detail1 {
        println!("        {l}");
    }
    for l in &detail2 {
        println!("        {l}");
    }
    let mut failed = 0;
    for l in &lines {
        println!(
            "[{}] {:<3} {:<28} {:>9.2?}  {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.id,
            l.title,
            l.elapsed,
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
