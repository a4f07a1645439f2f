//! Monte-Carlo efficient frontier: random long-only portfolios, and the
//! minimum-variance and maximum-Sharpe picks among them.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::RiskStats;
use crate::rng::{self, Domain};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_RISK_FREE: f64 = 0.01;
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub tickers: Vec<String>,
    pub weights: Vec<f64>,
}

impl PortfolioWeights {
    /// Weights must already sum to one.
    pub fn new(tickers: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if tickers.len() != weights.len() || tickers.is_empty() {
            return Err(Error::Invalid(format!(
                "{} tickers but {} weights",
                tickers.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invalid("non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { tickers, weights })
    }

    /// Divides by the algebraic sum so the result sums to one.
    pub fn normalized(tickers: Vec<String>, raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !sum.is_finite() || sum.abs() < SUM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "cannot normalise weights with sum {sum}"
            )));
        }
        Self::new(tickers, raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn get(&self, ticker: &str) -> Option<f64> {
        self.tickers
            .iter()
            .position(|t| t == ticker)
            .map(|i| self.weights[i])
    }

    pub fn is_long_only(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    fn check_tickers(&self, stats: &RiskStats) -> Result<()> {
        if self.tickers != stats.tickers {
            return Err(Error::TickerMismatch {
                expected: stats.tickers.clone(),
                actual: self.tickers.clone(),
            });
        }
        Ok(())
    }
}

/// Annualised expected return `wᵀ(mean_daily · trading_days)`.
pub fn portfolio_return(weights: &PortfolioWeights, stats: &RiskStats) -> Result<f64> {
    weights.check_tickers(stats)?;
    Ok(weights
        .weights
        .iter()
        .zip(&stats.mean_daily)
        .map(|(w, m)| w * m)
        .sum::<f64>()
        * stats.trading_days as f64)
}

/// Annualised standard deviation `√(wᵀ Σ_annual w)`.
pub fn portfolio_risk(weights: &PortfolioWeights, stats: &RiskStats) -> Result<f64> {
    weights.check_tickers(stats)?;
    let w = &weights.weights;
    let cov = &stats.cov_annual;
    let mut q = 0.0;
    for (i, wi) in w.iter().enumerate() {
        q += wi * crate::matrix::dot(cov.row(i), w);
    }
    if q < -1e-9 {
        return Err(Error::Numerical(format!(
            "negative portfolio variance {q}; covariance is not positive semidefinite"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

pub fn sharpe_ratio(ret: f64, risk: f64, risk_free: f64) -> Result<f64> {
    if !(risk > 0.0) {
        return Err(Error::Numerical(format!(
            "Sharpe ratio undefined for risk {risk}"
        )));
    }
    Ok((ret - risk_free) / risk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub weights: PortfolioWeights,
    pub ret_annual: f64,
    pub risk_annual: f64,
    pub sharpe: f64,
}

impl FrontierPoint {
    pub fn evaluate(weights: PortfolioWeights, stats: &RiskStats, risk_free: f64) -> Result<Self> {
        let ret_annual = portfolio_return(&weights, stats)?;
        let risk_annual = portfolio_risk(&weights, stats)?;
        let sharpe = sharpe_ratio(ret_annual, risk_annual, risk_free)?;
        Ok(Self {
            weights,
            ret_annual,
            risk_annual,
            sharpe,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCloud {
    pub points: Vec<FrontierPoint>,
    pub min_variance: usize,
    pub max_sharpe: usize,
    pub seed: u64,
    pub risk_free: f64,
}

/// First index of the minimum; NaNs never win.
fn argmin_by(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

impl FrontierCloud {
    pub fn from_points(points: Vec<FrontierPoint>, seed: u64, risk_free: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("frontier cloud has no points".into()));
        }
        let min_variance = argmin_by(points.iter().map(|p| p.risk_annual));
        let max_sharpe = argmin_by(points.iter().map(|p| -p.sharpe));
        Ok(Self {
            points,
            min_variance,
            max_sharpe,
            seed,
            risk_free,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub sample_count: usize,
    pub seed: u64,
    pub risk_free: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            sample_count: DEFAULT_SAMPLES,
            seed: 0,
            risk_free: DEFAULT_RISK_FREE,
        }
    }
}

/// Weight vector number `index`: i.i.d. uniform [0, 1) draws divided by their sum.
pub fn sample_weights(n_assets: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, Domain::FrontierSample, index);
    loop {
        let raw: Vec<f64> = (0..n_assets).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 {
            return raw.into_iter().map(|w| w / sum).collect();
        }
    }
}

pub fn sample_portfolios(stats: &RiskStats, cfg: &SamplingConfig) -> Result<FrontierCloud> {
    let k = stats.tickers.len();
    if k == 0 {
        return Err(Error::Insufficient("risk stats cover no assets".into()));
    }
    if cfg.sample_count == 0 {
        return Err(Error::Invalid("sample_count must be at least 1".into()));
    }
    let point = |i: usize| -> Result<FrontierPoint> {
        let w = sample_weights(k, cfg.seed, i as u64);
        let w = PortfolioWeights {
            tickers: stats.tickers.clone(),
            weights: w,
        };
        FrontierPoint::evaluate(w, stats, cfg.risk_free)
    };

    #[cfg(feature = "parallel")]
    let points: Result<Vec<FrontierPoint>> = {
        use rayon::prelude::*;
        (0..cfg.sample_count).into_par_iter().map(point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let points: Result<Vec<FrontierPoint>> = (0..cfg.sample_count).map(point).collect();

    FrontierCloud::from_points(points?, cfg.seed, cfg.risk_free)
}

pub fn min_variance_portfolio(cloud: &FrontierCloud) -> &FrontierPoint {
    &cloud.points[cloud.min_variance]
}

pub fn max_sharpe_portfolio(cloud: &FrontierCloud) -> &FrontierPoint {
    &cloud.points[cloud.max_sharpe]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub index: usize,
    #[serde(flatten)]
    pub point: FrontierPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSidecar {
    pub min_variance: MarkedPoint,
    pub max_sharpe: MarkedPoint,
    pub seed: u64,
    pub risk_free: f64,
    pub sample_count: usize,
}

/// One `risk,return,sharpe` row of the exported cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierRow {
    pub risk: f64,
    pub ret: f64,
    pub sharpe: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the cloud as CSV plus a `.json` sidecar naming the two picks.
pub fn export_frontier(cloud: &FrontierCloud, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    if cloud.points.is_empty() {
        return Err(Error::Invalid(
            "refusing to export an empty frontier".into(),
        ));
    }
    let mut buf = Vec::with_capacity(cloud.len() * 60);
    writeln!(buf, "risk,return,sharpe").expect("write to vec");
    for p in &cloud.points {
        writeln!(buf, "{},{},{}", p.risk_annual, p.ret_annual, p.sharpe).expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;

    let sidecar = FrontierSidecar {
        min_variance: MarkedPoint {
            index: cloud.min_variance,
            point: min_variance_portfolio(cloud).clone(),
        },
        max_sharpe: MarkedPoint {
            index: cloud.max_sharpe,
            point: max_sharpe_portfolio(cloud).clone(),
        },
        seed: cloud.seed,
        risk_free: cloud.risk_free,
        sample_count: cloud.len(),
    };
    let json_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(json_path)
}

pub fn read_frontier_csv(path: impl AsRef<Path>) -> Result<Vec<FrontierRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("risk,return,sharpe") {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: "expected header risk,return,sharpe".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Parse {
                path: path.into(),
                line: i as u64 + 2,
                message: format!("bad frontier row {line:?}"),
            };
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match v[..] {
                [risk, ret, sharpe] => Ok(FrontierRow { risk, ret, sharpe }),
                _ => Err(bad()),
            }
        })
        .collect()
}

pub fn read_frontier_sidecar(path: impl AsRef<Path>) -> Result<FrontierSidecar> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn stats(mean_daily: Vec<f64>, cov_annual: Vec<Vec<f64>>) -> RiskStats {
        let k = mean_daily.len();
        let cov_annual = Matrix::from_rows(&cov_annual).unwrap();
        let mut cov_daily = cov_annual.clone();
        cov_daily
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v /= 250.0);
        RiskStats {
            tickers: (0..k).map(|i| format!("A{i}")).collect(),
            trading_days: 250,
            mean_annual: mean_daily.iter().map(|m| m * 250.0).collect(),
            vol_daily: (0..k).map(|i| cov_daily[(i, i)].sqrt()).collect(),
            vol_annual: (0..k).map(|i| cov_annual[(i, i)].sqrt()).collect(),
            mean_daily,
            cov_daily,
            cov_annual,
        }
    }

    fn weights(w: &[f64]) -> PortfolioWeights {
        PortfolioWeights::new((0..w.len()).map(|i| format!("A{i}")).collect(), w.to_vec()).unwrap()
    }

    fn point(risk: f64, sharpe: f64) -> FrontierPoint {
        FrontierPoint {
            weights: weights(&[1.0]),
            ret_annual: 0.0,
            risk_annual: risk,
            sharpe,
        }
    }

    #[test]
    fn single_asset_identities() {
        let s = stats(vec![0.0004], vec![vec![0.09]]);
        let w = weights(&[1.0]);
        assert!((portfolio_return(&w, &s).unwrap() - 0.1).abs() < 1e-15);
        assert!((portfolio_risk(&w, &s).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn equal_means_affine_invariance() {
        let s = stats(vec![0.001, 0.001], vec![vec![0.04, 0.0], vec![0.0, 0.04]]);
        for a in [0.0, 0.3, 0.5, 0.9] {
            let r = portfolio_return(&weights(&[a, 1.0 - a]), &s).unwrap();
            assert!((r - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn diversification_of_uncorrelated_pair() {
        let sigma: f64 = 0.2;
        let s = stats(
            vec![0.0, 0.0],
            vec![vec![sigma * sigma, 0.0], vec![0.0, sigma * sigma]],
        );
        let r = portfolio_risk(&weights(&[0.5, 0.5]), &s).unwrap();
        assert!((r - sigma / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ticker_mismatch_and_broken_covariance() {
        let s = stats(vec![0.0, 0.0], vec![vec![0.01, 0.0], vec![0.0, 0.01]]);
        let bad = PortfolioWeights::new(vec!["X".into(), "Y".into()], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            portfolio_return(&bad, &s),
            Err(Error::TickerMismatch { .. })
        ));
        let neg = stats(vec![0.0, 0.0], vec![vec![0.01, 0.1], vec![0.1, 0.01]]);
        assert!(matches!(
            portfolio_risk(&weights(&[1.5, -0.5]), &neg),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn sharpe_arithmetic() {
        assert!((sharpe_ratio(0.15, 0.20, 0.01).unwrap() - 0.70).abs() < 1e-12);
        assert_eq!(sharpe_ratio(0.01, 0.3, 0.01).unwrap(), 0.0);
        assert!((sharpe_ratio(0.25, 0.12, 0.01).unwrap() - 2.0).abs() < 1e-12);
        assert!(sharpe_ratio(0.1, 0.0, 0.01).is_err());
        assert!(sharpe_ratio(0.1, -0.1, 0.01).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(PortfolioWeights::new(vec!["A".into()], vec![0.9]).is_err());
        let n =
            PortfolioWeights::normalized(vec!["A".into(), "B".into()], vec![0.8, -0.2]).unwrap();
        assert!((n.weights[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((n.weights[1] + 1.0 / 3.0).abs() < 1e-15);
        assert!(!n.is_long_only());
        assert!(
            PortfolioWeights::normalized(vec!["A".into(), "B".into()], vec![1.0, -1.0]).is_err()
        );
    }

    #[test]
    fn degenerate_single_asset_cloud() {
        let s = stats(vec![0.001], vec![vec![0.04]]);
        let cloud = sample_portfolios(
            &s,
            &SamplingConfig {
                sample_count: 50,
                seed: 3,
                risk_free: 0.01,
            },
        )
        .unwrap();
        assert!(cloud.points.iter().all(|p| p.weights.weights == [1.0]));
        assert_eq!(cloud.min_variance, 0);
        assert_eq!(cloud.max_sharpe, 0);
    }

    #[test]
    fn default_sample_count() {
        let s = stats(
            vec![0.001, 0.0005],
            vec![vec![0.04, 0.01], vec![0.01, 0.02]],
        );
        let cloud = sample_portfolios(&s, &SamplingConfig::default()).unwrap();
        assert_eq!(cloud.len(), 10_000);
    }

    #[test]
    fn special_point_lookup() {
        let one = FrontierCloud::from_points(vec![point(0.2, 0.5)], 0, 0.01).unwrap();
        assert_eq!(min_variance_portfolio(&one).risk_annual, 0.2);
        assert_eq!(max_sharpe_portfolio(&one).sharpe, 0.5);

        let two =
            FrontierCloud::from_points(vec![point(0.2, 1.1), point(0.1, 0.3)], 0, 0.01).unwrap();
        assert_eq!(two.min_variance, 1);
        assert_eq!(two.max_sharpe, 0);

        let tied =
            FrontierCloud::from_points(vec![point(0.1, 1.0), point(0.1, 1.0)], 0, 0.01).unwrap();
        assert_eq!((tied.min_variance, tied.max_sharpe), (0, 0));

        assert!(FrontierCloud::from_points(vec![], 0, 0.01).is_err());
    }

    #[test]
    fn empty_and_small_export() {
        let dir = tempfile::tempdir().unwrap();
        let empty = FrontierCloud {
            points: vec![],
            min_variance: 0,
            max_sharpe: 0,
            seed: 0,
            risk_free: 0.01,
        };
        assert!(export_frontier(&empty, dir.path().join("e.csv")).is_err());

        let cloud = FrontierCloud::from_points(
            vec![point(0.3, 0.1), point(0.2, 0.4), point(0.25, 0.2)],
            9,
            0.01,
        )
        .unwrap();
        let csv = dir.path().join("f.csv");
        let side = export_frontier(&cloud, &csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 4);
        let sc = read_frontier_sidecar(side).unwrap();
        assert_eq!(sc.min_variance.index, 1);
        assert_eq!(sc.seed, 9);
    }
}
