use approx::assert_relative_eq;
use coint_rec_core::dgp::{
    build_covariance, make_sparse_beta, simulate_cointegrated, simulate_panel,
    simulate_panel_with_innovations, CovarianceKind, CovarianceSpec, SupportPattern,
};
use coint_rec_core::linalg::cumulative_sums;
use coint_rec_core::Matrix;
use proptest::prelude::*;

#[test]
fn covariance_examples() {
    let id = build_covariance(&CovarianceSpec::identity(5)).unwrap();
    assert_eq!(id.matrix(), &Matrix::identity(5, 5));
    assert_eq!((id.c_sigma(), id.cap_sigma()), (1.0, 1.0));
    let eq = build_covariance(&CovarianceSpec::new(
        3,
        CovarianceKind::Equicorrelation { rho: 0.5 },
    ))
    .unwrap();
    assert_relative_eq!(eq.c_sigma(), 0.5, max_relative = 1e-12);
    assert_relative_eq!(eq.cap_sigma(), 2.0, max_relative = 1e-12);
    let tp = build_covariance(&CovarianceSpec::new(
        50,
        CovarianceKind::Toeplitz { rho: 0.9 },
    ))
    .unwrap();
    assert!(tp.c_sigma() > 0.0);
    assert!(build_covariance(&CovarianceSpec::new(
        3,
        CovarianceKind::Toeplitz { rho: 1.0 }
    ))
    .is_err());
    assert!(build_covariance(&CovarianceSpec::new(
        3,
        CovarianceKind::Equicorrelation { rho: -0.1 }
    ))
    .is_err());
}

#[test]
fn cholesky_round_trip() {
    let cov = build_covariance(&CovarianceSpec::new(
        8,
        CovarianceKind::Toeplitz { rho: -0.6 },
    ))
    .unwrap();
    let l = cov.cholesky_lower();
    let err = (l * l.transpose() - cov.matrix()).norm() / cov.matrix().norm();
    assert!(err <= 1e-10);
}

#[test]
fn single_period_moments() {
    let reps = 100_000;
    let mut sum = [0.0f64; 2];
    for seed in 0..reps {
        let s = simulate_panel(1, &Matrix::identity(2, 2), seed).unwrap();
        sum[0] += s[(0, 0)];
        sum[1] += s[(0, 1)];
    }
    for v in sum {
        assert!((v / reps as f64).abs() <= 4.0 / (reps as f64).sqrt());
    }
}

#[test]
fn differences_recover_covariance() {
    let cov = build_covariance(&CovarianceSpec::new(
        3,
        CovarianceKind::Equicorrelation { rho: 0.4 },
    ))
    .unwrap();
    let t = 20_000;
    let panel = simulate_panel_with_innovations(t, &cov, 5).unwrap();
    let walks = &panel.walks;
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for r in 0..t {
                let di = walks[(r, i)] - if r > 0 { walks[(r - 1, i)] } else { 0.0 };
                let dj = walks[(r, j)] - if r > 0 { walks[(r - 1, j)] } else { 0.0 };
                acc += di * dj;
            }
            assert!((acc / t as f64 - cov.matrix()[(i, j)]).abs() <= 5.0 / (t as f64).sqrt());
        }
    }
    assert_eq!(walks, &cumulative_sums(&panel.innovations));
}

#[test]
fn zero_beta_returns_innovation() {
    let cov = build_covariance(&CovarianceSpec::identity(4)).unwrap();
    let sample = simulate_cointegrated(30, &[0.0; 3], &cov, 8).unwrap();
    assert_eq!(sample.y, sample.eps_y);
    assert!(sample.support.is_empty());
}

#[test]
fn cointegrating_residual_is_white() {
    let cov = build_covariance(&CovarianceSpec::identity(2)).unwrap();
    let t = 20_000;
    let sample = simulate_cointegrated(t, &[1.0], &cov, 12).unwrap();
    let resid: Vec<f64> = (0..t).map(|i| sample.y[i] - sample.x[(i, 0)]).collect();
    for (r, e) in resid.iter().zip(&sample.eps_y) {
        assert!((r - e).abs() <= 1e-12 * (1.0 + sample.x.amax()));
    }
    let mean = resid.iter().sum::<f64>() / t as f64;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>();
    let lag1 = resid
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>();
    assert!((lag1 / var).abs() <= 4.0 / (t as f64).sqrt());
}

#[test]
fn sparse_beta_examples() {
    assert_eq!(
        make_sparse_beta(5, 2, 1.0, SupportPattern::FirstS)
            .unwrap()
            .values,
        [1.0, 1.0, 0.0, 0.0, 0.0]
    );
    assert_eq!(
        make_sparse_beta(5, 5, 0.5, SupportPattern::FirstS)
            .unwrap()
            .values,
        [0.5; 5]
    );
    let a = make_sparse_beta(20, 4, 1.0, SupportPattern::Random { seed: 3 }).unwrap();
    let b = make_sparse_beta(20, 4, 1.0, SupportPattern::Random { seed: 3 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.support.len(), 4);
    assert!(make_sparse_beta(3, 4, 1.0, SupportPattern::FirstS).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sample_invariants(seed in any::<u64>(), t in 1usize..60, n in 1usize..8, rho in -0.8f64..0.8) {
        let cov = build_covariance(&CovarianceSpec::new(n + 1, CovarianceKind::Toeplitz { rho })).unwrap();
        let beta = make_sparse_beta(n, 1.max(n / 2), 1.5, SupportPattern::Random { seed }).unwrap();
        let a = simulate_cointegrated(t, &beta.values, &cov, seed).unwrap();
        let b = simulate_cointegrated(t, &beta.values, &cov, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.x, &cumulative_sums(&a.eps_x));
        prop_assert_eq!(&a.support, &beta.support);
        for i in 0..t {
            let fitted: f64 = (0..n).map(|j| beta.values[j] * a.x[(i, j)]).sum();
            prop_assert_eq!((fitted + a.eps_y[i]).to_bits(), a.y[i].to_bits());
        }
    }
}
