use chrono::NaiveDate;
use folio_core::analytics::{daily_returns, risk_stats, ReturnMatrix};
use folio_core::eigen::{
    best_eigen_portfolio, eigen_portfolios, loadings_to_weights, pca_returns, standardize,
};
use folio_core::market_data::{build_panel, AlignPolicy};
use folio_core::matrix::Matrix;
use folio_core::rng::{self, Domain};
use folio_core::synthetic::SyntheticMarket;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn matrix_returns(rows: Vec<Vec<f64>>) -> ReturnMatrix {
    let k = rows[0].len();
    let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    ReturnMatrix {
        tickers: (0..k).map(|i| format!("A{i}")).collect(),
        dates: (0..rows.len())
            .map(|i| d0 + chrono::Days::new(i as u64))
            .collect(),
        returns: Matrix::from_rows(&rows).unwrap(),
    }
}

fn correlated_rows(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|t| {
            let mut r = rng::stream(seed, Domain::Synthetic, t as u64);
            let f: f64 = r.sample(StandardNormal);
            (0..k)
                .map(|i| {
                    let e: f64 = r.sample(StandardNormal);
                    0.01 * (0.3 * (i as f64 + 1.0) / k as f64 * f + e) * (1.0 + i as f64 * 0.2)
                })
                .collect()
        })
        .collect()
}

/// Eigenvalues of the standardised covariance through nalgebra.
fn oracle_eigenvalues(returns: &ReturnMatrix) -> Vec<f64> {
    let z = standardize(returns).unwrap();
    let (n, k) = z.shape();
    let zm = nalgebra::DMatrix::from_fn(n, k, |r, c| z[(r, c)]);
    let cov = zm.transpose() * &zm / (n as f64 - 1.0);
    let mut v: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

fn check_against_oracle(returns: &ReturnMatrix) -> Result<(), TestCaseError> {
    let k = returns.tickers.len();
    let pca = pca_returns(returns, k).unwrap();
    let oracle = oracle_eigenvalues(returns);
    for (a, b) in pca.explained_variance.iter().zip(&oracle) {
        prop_assert!((a - b.max(0.0)).abs() < 1e-9, "{a} vs {b}");
    }
    let c = &pca.components;
    for i in 0..k {
        for j in 0..k {
            let d: f64 = c.row(i).iter().zip(c.row(j)).map(|(x, y)| x * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            prop_assert!((d - want).abs() < 1e-9);
        }
    }
    let r = &pca.explained_variance_ratio;
    prop_assert!(r.windows(2).all(|w| w[0] >= w[1]));
    prop_assert!(r.iter().all(|x| (0.0..=1.0).contains(x)));
    prop_assert!(r.iter().sum::<f64>() <= 1.0 + 1e-9);
    let mut sorted = r.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    prop_assert_eq!(&sorted, r);
    Ok(())
}

#[test]
fn five_asset_oracle() {
    check_against_oracle(&matrix_returns(correlated_rows(400, 5, 3))).unwrap();
}

proptest! {
    #[test]
    fn eigenvalues_match_oracle(seed in any::<u64>(), k in 2usize..=5, n in 10usize..80) {
        check_against_oracle(&matrix_returns(correlated_rows(n, k, seed)))?;
    }

    #[test]
    fn sign_flip_leaves_weights(loadings in prop::collection::vec(-1.0f64..1.0, 2..8)) {
        let tickers: Vec<String> = (0..loadings.len()).map(|i| format!("A{i}")).collect();
        let flipped: Vec<f64> = loadings.iter().map(|x| -x).collect();
        let a = loadings_to_weights(&tickers, &loadings);
        let b = loadings_to_weights(&tickers, &flipped);
        match (a, b) {
            (Some(a), Some(b)) => {
                for (x, y) in a.weights.iter().zip(&b.weights) {
                    prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
                }
            }
            (None, None) => {}
            _ => prop_assert!(false, "flip changed whether normalisation is defined"),
        }
    }
}

#[test]
fn independent_equal_variance_pair_is_isotropic() {
    let rows: Vec<Vec<f64>> = (0..5000)
        .map(|t| {
            let mut r = rng::stream(8, Domain::Synthetic, t);
            vec![
                r.sample::<f64, _>(StandardNormal) * 0.01,
                r.sample::<f64, _>(StandardNormal) * 0.01,
            ]
        })
        .collect();
    let pca = pca_returns(&matrix_returns(rows), 2).unwrap();
    for r in &pca.explained_variance_ratio {
        assert!((r - 0.5).abs() < 0.05, "{r}");
    }
}

#[test]
fn synthetic_sector_six_components_and_portfolios() {
    let market = SyntheticMarket::new(
        10,
        NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2020, 12, 31).unwrap(),
        42,
    );
    let panel = build_panel(&market.generate().unwrap(), AlignPolicy::Intersect).unwrap();
    let returns = daily_returns(&panel).unwrap();
    let stats = risk_stats(&returns, 250).unwrap();
    let pca = pca_returns(&returns, 6).unwrap();
    let explained: f64 = pca.explained_variance_ratio.iter().sum();
    assert!(explained > 0.8, "six components explain {explained}");

    let set = eigen_portfolios(&pca, &stats, 0.01).unwrap();
    assert_eq!(set.portfolios.len() + set.skipped.len(), 6);
    for p in &set.portfolios {
        // Independent normalisation of the raw loadings.
        let row = pca.components.row(p.component_index);
        let sum: f64 = row.iter().sum();
        for (w, l) in p.weights.weights.iter().zip(row) {
            assert!((w - l / sum).abs() < 1e-9);
        }
        assert!((p.weights.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let best = best_eigen_portfolio(&set.portfolios).unwrap();
    let scan =
        set.portfolios.iter().fold(
            &set.portfolios[0],
            |b, p| if p.sharpe > b.sharpe { p } else { b },
        );
    assert_eq!(best, scan);
}
