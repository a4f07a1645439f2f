//! Eigen portfolios from a principal component analysis of standardised
//! daily returns.
//!
//! Each component's loadings are divided by their algebraic sum to give a
//! (possibly long/short) weight vector summing to one; the portfolio with
//! the highest Sharpe ratio is selected.

use serde::{Deserialize, Serialize};

use crate::analytics::{column_means, sample_covariance, ReturnMatrix, RiskStats};
use crate::frontier::{portfolio_return, portfolio_risk, sharpe_ratio, PortfolioWeights};
use crate::matrix::Matrix;
use crate::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 6;
const NORMALIZATION_FLOOR: f64 = 1e-9;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching unit eigenvectors
/// as the rows of the returned matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Invalid(format!(
            "matrix {:?} is not square",
            a.shape()
        )));
    }
    let mut m = a.clone();
    // Columns of `v` accumulate the rotations.
    let mut v = Matrix::identity(n);
    let scale: f64 = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "eigen-decomposition produced non-finite values".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut vectors = Matrix::zeros(n, n);
    for (row, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(row, k)] = v[(k, src)];
        }
    }
    Ok((order.iter().map(|&i| values[i]).collect(), vectors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub tickers: Vec<String>,
    /// `n_components × tickers` loadings, unit rows.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub n_components: usize,
}

/// Column-wise z-scores using the sample standard deviation.
pub fn standardize(returns: &ReturnMatrix) -> Result<Matrix> {
    let m = &returns.returns;
    let means = column_means(m);
    let cov = sample_covariance(m);
    let mut z = m.clone();
    for c in 0..m.cols() {
        let sd = cov[(c, c)].sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::DegenerateColumn(returns.tickers[c].clone()));
        }
        for r in 0..m.rows() {
            z[(r, c)] = (m[(r, c)] - means[c]) / sd;
        }
    }
    Ok(z)
}

pub fn pca_returns(returns: &ReturnMatrix, n_components: usize) -> Result<PcaResult> {
    let k = returns.tickers.len();
    if n_components == 0 || n_components > k {
        return Err(Error::Invalid(format!(
            "n_components {n_components} must be in 1..={k}"
        )));
    }
    if returns.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 return rows, got {}",
            returns.len()
        )));
    }
    let z = standardize(returns)?;
    let corr = sample_covariance(&z);
    let (values, vectors) = symmetric_eigen(&corr)?;
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();

    let mut components = Matrix::zeros(n_components, k);
    for r in 0..n_components {
        let row = vectors.row(r);
        // Deterministic sign: loadings sum non-negative, else first non-zero positive.
        let sum: f64 = row.iter().sum();
        let flip = if sum.abs() > NORMALIZATION_FLOOR {
            sum < 0.0
        } else {
            row.iter().find(|x| x.abs() > 0.0).is_some_and(|x| *x < 0.0)
        };
        for (dst, &x) in components.row_mut(r).iter_mut().zip(row) {
            *dst = if flip { -x } else { x };
        }
    }
    let explained_variance: Vec<f64> = values[..n_components].iter().map(|v| v.max(0.0)).collect();
    Ok(PcaResult {
        tickers: returns.tickers.clone(),
        explained_variance_ratio: explained_variance.iter().map(|v| v / total).collect(),
        explained_variance,
        components,
        n_components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPortfolio {
    pub component_index: usize,
    pub weights: PortfolioWeights,
    pub ret_annual: f64,
    pub risk_annual: f64,
    pub sharpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedComponent {
    pub component_index: usize,
    pub loading_sum: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPortfolios {
    pub portfolios: Vec<EigenPortfolio>,
    pub skipped: Vec<SkippedComponent>,
}

/// Sum-normalised loadings of a single component.
pub fn loadings_to_weights(tickers: &[String], loadings: &[f64]) -> Option<PortfolioWeights> {
    let sum: f64 = loadings.iter().sum();
    if !sum.is_finite() || sum.abs() < NORMALIZATION_FLOOR {
        return None;
    }
    PortfolioWeights::normalized(tickers.to_vec(), loadings.to_vec()).ok()
}

pub fn eigen_portfolios(
    pca: &PcaResult,
    stats: &RiskStats,
    risk_free: f64,
) -> Result<EigenPortfolios> {
    let mut out = EigenPortfolios {
        portfolios: Vec::new(),
        skipped: Vec::new(),
    };
    for c in 0..pca.n_components {
        let loadings = pca.components.row(c);
        let Some(weights) = loadings_to_weights(&pca.tickers, loadings) else {
            out.skipped.push(SkippedComponent {
                component_index: c,
                loading_sum: loadings.iter().sum(),
                reason: "loadings sum to ~0; normalisation undefined".into(),
            });
            continue;
        };
        let ret_annual = portfolio_return(&weights, stats)?;
        let risk_annual = portfolio_risk(&weights, stats)?;
        match sharpe_ratio(ret_annual, risk_annual, risk_free) {
            Ok(sharpe) => out.portfolios.push(EigenPortfolio {
                component_index: c,
                weights,
                ret_annual,
                risk_annual,
                sharpe,
            }),
            Err(e) => out.skipped.push(SkippedComponent {
                component_index: c,
                loading_sum: loadings.iter().sum(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

pub fn best_eigen_portfolio(portfolios: &[EigenPortfolio]) -> Result<&EigenPortfolio> {
    let mut best: Option<&EigenPortfolio> = None;
    for p in portfolios {
        match best {
            Some(b) if !(p.sharpe > b.sharpe) => {}
            _ => best = Some(p),
        }
    }
    best.ok_or_else(|| Error::Insufficient("no eigen portfolios to choose from".into()))
}

/// Everything the `eigen` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub tickers: Vec<String>,
    pub explained_variance_ratio: Vec<f64>,
    pub cumulative_explained: f64,
    pub portfolios: Vec<EigenPortfolio>,
    pub skipped: Vec<SkippedComponent>,
    pub selected: EigenPortfolio,
}

pub fn eigen_report(
    returns: &ReturnMatrix,
    stats: &RiskStats,
    n_components: usize,
    risk_free: f64,
) -> Result<EigenReport> {
    let pca = pca_returns(returns, n_components)?;
    let set = eigen_portfolios(&pca, stats, risk_free)?;
    let selected = best_eigen_portfolio(&set.portfolios)?.clone();
    Ok(EigenReport {
        tickers: pca.tickers,
        cumulative_explained: pca.explained_variance_ratio.iter().sum(),
        explained_variance_ratio: pca.explained_variance_ratio,
        portfolios: set.portfolios,
        skipped: set.skipped,
        selected,
    })
}
