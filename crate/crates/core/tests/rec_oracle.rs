use approx::assert_relative_eq;
use coint_rec_core::lasso::cone_membership;
use coint_rec_core::linalg::{extreme_eigenvalues, gram, principal_submatrix};
use coint_rec_core::rec::{
    bickel_lower_bound, enumerate_supports, rec_sampled, sparse_eigenvalues, ConeProblem,
    DescentOptions, DEFAULT_BUDGET,
};
use coint_rec_core::rng::GaussianStream;
use coint_rec_core::Matrix;
use proptest::prelude::*;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = GaussianStream::from_seed(seed);
    Matrix::from_fn(rows, cols, |_, _| g.standard_normal())
}

/// Eigenvalues of a 2x2 symmetric block from its characteristic polynomial.
fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

#[test]
fn two_subsets_match_characteristic_polynomial() {
    let s = random_matrix(8, 5, 3);
    let f = 0.3;
    let got = sparse_eigenvalues(&s, f, 2, DEFAULT_BUDGET).unwrap();
    let g = gram(&s);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..5 {
        for j in (i + 1)..5 {
            let (l, h) = eig2(g[(i, i)], g[(i, j)], g[(j, j)]);
            lo = lo.min(l);
            hi = hi.max(h);
        }
    }
    assert_relative_eq!(got.phi_min, f * f * lo, max_relative = 1e-10);
    assert_relative_eq!(got.phi_max, f * f * hi, max_relative = 1e-10);
    assert_eq!(got.subsets_scanned, 10);
}

#[test]
fn singletons_and_full_set() {
    let s = random_matrix(10, 4, 9);
    let g = gram(&s);
    let f = 0.5;
    let one = sparse_eigenvalues(&s, f, 1, DEFAULT_BUDGET).unwrap();
    let norms: Vec<f64> = (0..4).map(|j| g[(j, j)]).collect();
    assert_relative_eq!(
        one.phi_min,
        f * f * norms.iter().cloned().fold(f64::INFINITY, f64::min),
        max_relative = 1e-12
    );
    assert_relative_eq!(
        one.phi_max,
        f * f * norms.iter().cloned().fold(0.0, f64::max),
        max_relative = 1e-12
    );
    let all = sparse_eigenvalues(&s, f, 4, DEFAULT_BUDGET).unwrap();
    let (lo, hi) = extreme_eigenvalues(&g);
    assert_relative_eq!(all.phi_min, f * f * lo, max_relative = 1e-10);
    assert_relative_eq!(all.phi_max, f * f * hi, max_relative = 1e-10);
}

#[test]
fn zero_column_allowed() {
    let mut s = random_matrix(6, 3, 4);
    s.column_mut(1).fill(0.0);
    let got = sparse_eigenvalues(&s, 1.0, 1, DEFAULT_BUDGET).unwrap();
    assert_eq!(got.phi_min, 0.0);
    assert_eq!(got.argmin_set, vec![1]);
}

#[test]
fn full_support_descent_hits_smallest_singular_value() {
    let s = random_matrix(20, 4, 17);
    let f = 0.7;
    let problem = ConeProblem::new(&s, f, 4, 3.0).unwrap();
    let out = rec_sampled(&problem, &DescentOptions::default());
    let (lo, _) = extreme_eigenvalues(&gram(&s));
    assert!((out.upper_estimate - f * lo.sqrt()).abs() <= 1e-6);
}

#[test]
fn axis_cone_gives_smallest_column() {
    let s = random_matrix(15, 2, 5);
    let f = 0.2;
    let problem = ConeProblem::new(&s, f, 1, 0.0).unwrap();
    let out = rec_sampled(&problem, &DescentOptions::default());
    let smallest = (0..2)
        .map(|j| s.column(j).norm())
        .fold(f64::INFINITY, f64::min);
    assert_relative_eq!(out.upper_estimate, f * smallest, max_relative = 1e-9);
}

#[test]
fn random_instance_ordering() {
    let s = random_matrix(20, 6, 23);
    let f = 0.25;
    let lower = bickel_lower_bound(&s, f, 2, 2, 3.0, DEFAULT_BUDGET).unwrap();
    let problem = ConeProblem::new(&s, f, 2, 3.0).unwrap();
    let out = rec_sampled(
        &problem,
        &DescentOptions {
            restarts: 8,
            ..DescentOptions::default()
        },
    );
    assert!(lower <= out.upper_estimate);
    let cone = cone_membership(&out.witness_direction, &out.witness_support, 3.0).unwrap();
    assert!(cone.slack >= -1e-12);
}

#[test]
fn descent_is_deterministic() {
    let s = random_matrix(12, 5, 8);
    let problem = ConeProblem::new(&s, 0.4, 2, 3.0).unwrap();
    let opts = DescentOptions {
        restarts: 4,
        iters: 50,
        seed: 99,
        ..DescentOptions::default()
    };
    let a = rec_sampled(&problem, &opts);
    let b = rec_sampled(&problem, &opts);
    assert_eq!(a, b);
}

/// Column-major scan in reverse lexicographic order, as an independent path.
fn reverse_scan(g: &Matrix, u: usize) -> (f64, f64) {
    let mut sets = enumerate_supports(g.nrows(), u, DEFAULT_BUDGET).unwrap();
    sets.reverse();
    sets.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), set| {
            let block = principal_submatrix(g, set);
            let eig = block.symmetric_eigenvalues();
            let l = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let h = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo.min(l), hi.max(h))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sparse_eigenvalues_agree_with_second_scan(seed in any::<u64>(), t in 5usize..40, n in 3usize..10) {
        let s = random_matrix(t, n, seed);
        let g = gram(&s);
        let mut prev: Option<(f64, f64)> = None;
        for u in 1..=3 {
            let got = sparse_eigenvalues(&s, 1.0, u, DEFAULT_BUDGET).unwrap();
            let (lo, hi) = reverse_scan(&g, u);
            prop_assert!((got.phi_min - lo).abs() <= 1e-10 * hi.abs().max(1.0));
            prop_assert!((got.phi_max - hi).abs() <= 1e-10 * hi.abs());
            if let Some((plo, phi)) = prev {
                prop_assert!(got.phi_min <= plo * (1.0 + 1e-12));
                prop_assert!(got.phi_max >= phi * (1.0 - 1e-12));
            }
            prev = Some((got.phi_min, got.phi_max));
        }
    }

    #[test]
    fn scaling_f_scales_eigenvalues_quadratically(seed in any::<u64>(), c in 0.1f64..10.0) {
        let s = random_matrix(10, 5, seed);
        let a = sparse_eigenvalues(&s, 1.0, 2, DEFAULT_BUDGET).unwrap();
        let b = sparse_eigenvalues(&s, c, 2, DEFAULT_BUDGET).unwrap();
        prop_assert!((b.phi_min - c * c * a.phi_min).abs() <= 1e-10 * c * c * a.phi_max);
        prop_assert!((b.phi_max - c * c * a.phi_max).abs() <= 1e-10 * c * c * a.phi_max);
    }
}
