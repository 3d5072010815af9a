//! Data generating processes: Gaussian innovations with a controlled
//! covariance spectrum, random-walk panels and cointegrated samples
//!
//! ```text
//! y_t = beta' x_t + eps_{y,t},   x_t = x_{t-1} + eps_{x,t},   x_0 = 0,
//! ```
//!
//! with `(eps_{y,t}, eps_{x,t}')' ~ N(0, Sigma)` i.i.d. Draws use the lower
//! Cholesky factor of `Sigma`.

use alloc::vec::Vec;

use crate::error::domain;
use crate::linalg::{self, Matrix};
use crate::rng::{self, GaussianStream};
use crate::{Error, Result};

/// Covariance family.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CovarianceKind {
    Identity,
    /// `Sigma_ij = rho^{|i-j|}`, `rho` in `(-1, 1)`.
    Toeplitz {
        rho: f64,
    },
    /// Unit diagonal, `rho` off the diagonal, `rho` in `[0, 1)`.
    Equicorrelation {
        rho: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceSpec {
    pub dim: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: CovarianceKind,
}

impl CovarianceSpec {
    pub fn new(dim: usize, kind: CovarianceKind) -> Self {
        Self { dim, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, CovarianceKind::Identity)
    }
}

/// A realized positive definite covariance with its Cholesky factor and
/// extreme eigenvalues.
#[derive(Clone, Debug)]
pub struct Covariance {
    matrix: Matrix,
    lower: Matrix,
    c_sigma: f64,
    cap_sigma: f64,
    identity: bool,
}

impl Covariance {
    /// Validate a symmetric positive definite matrix.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidDimension {
                what: "covariance (must be square, non-empty)",
                value: matrix.ncols(),
            });
        }
        linalg::ensure_finite(matrix.as_slice(), "covariance")?;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Numerical("covariance is not symmetric"));
                }
            }
        }
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let lower = chol.l();
        let (c_sigma, cap_sigma) = linalg::extreme_eigenvalues(&matrix);
        if !(c_sigma > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let identity = matrix == Matrix::identity(n, n);
        Ok(Self {
            matrix,
            lower,
            c_sigma,
            cap_sigma,
            identity,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Lower Cholesky factor `L` with `L L' = Sigma`.
    pub fn cholesky_lower(&self) -> &Matrix {
        &self.lower
    }

    /// `lambda_min(Sigma)`.
    pub fn c_sigma(&self) -> f64 {
        self.c_sigma
    }

    /// `lambda_max(Sigma)`.
    pub fn cap_sigma(&self) -> f64 {
        self.cap_sigma
    }

    /// The covariance of a subset of coordinates.
    pub fn block(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() || idx.iter().any(|&i| i >= self.dim()) {
            return Err(Error::InvalidDimension {
                what: "covariance block index",
                value: idx.iter().copied().max().unwrap_or(0),
            });
        }
        Self::from_matrix(linalg::principal_submatrix(&self.matrix, idx))
    }

    /// Fill `out` with one draw of `L z`, `z ~ N(0, I)`.
    pub fn draw_into(&self, stream: &mut GaussianStream, z: &mut [f64], out: &mut [f64]) {
        let d = self.dim();
        for zi in z.iter_mut() {
            *zi = stream.standard_normal();
        }
        if self.identity {
            out.copy_from_slice(z);
            return;
        }
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += self.lower[(i, k)] * zk;
            }
            *o = acc;
        }
    }
}

/// Build `Sigma` for a spec and compute `(c_sigma, C_sigma)`.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<Covariance> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::InvalidDimension {
            what: "covariance dim",
            value: 0,
        });
    }
    let matrix = match spec.kind {
        CovarianceKind::Identity => Matrix::identity(d, d),
        CovarianceKind::Toeplitz { rho } => {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(domain("rho", rho, "-1 < rho < 1 for toeplitz"));
            }
            Matrix::from_fn(d, d, |i, j| libm::pow(rho, i.abs_diff(j) as f64))
        }
        CovarianceKind::Equicorrelation { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return Err(domain("rho", rho, "0 <= rho < 1 for equicorrelation"));
            }
            Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
        }
    };
    Covariance::from_matrix(matrix)
}

/// `T x d` matrix of i.i.d. `N(0, Sigma)` rows, generated row by row.
pub fn simulate_innovations(
    horizon: usize,
    cov: &Covariance,
    stream: &mut GaussianStream,
) -> Matrix {
    let d = cov.dim();
    let mut e = Matrix::zeros(horizon, d);
    let mut z = alloc::vec![0.0; d];
    let mut row = alloc::vec![0.0; d];
    for t in 0..horizon {
        cov.draw_into(stream, &mut z, &mut row);
        for (j, v) in row.iter().enumerate() {
            e[(t, j)] = *v;
        }
    }
    e
}

/// Innovations `E` and their random walks `S = U E`.
#[derive(Clone, Debug)]
pub struct Panel {
    pub innovations: Matrix,
    pub walks: Matrix,
}

/// Random-walk panel from a seed.
pub fn simulate_panel_with_innovations(
    horizon: usize,
    cov: &Covariance,
    seed: u64,
) -> Result<Panel> {
    if horizon == 0 {
        return Err(Error::InvalidDimension {
            what: "horizon T",
            value: 0,
        });
    }
    let mut stream = GaussianStream::from_seed(seed);
    let innovations = simulate_innovations(horizon, cov, &mut stream);
    let walks = linalg::cumulative_sums(&innovations);
    Ok(Panel { innovations, walks })
}

/// `T x N` random walks driven by `N(0, Sigma_x)` innovations.
pub fn simulate_panel(horizon: usize, sigma_x: &Matrix, seed: u64) -> Result<Matrix> {
    let cov = Covariance::from_matrix(sigma_x.clone())?;
    Ok(simulate_panel_with_innovations(horizon, &cov, seed)?.walks)
}

/// One draw from the cointegrating model.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedSample {
    pub y: Vec<f64>,
    /// `T x N` integrated regressors.
    pub x: Matrix,
    pub eps_y: Vec<f64>,
    /// Innovations of the regressors, `x_t - x_{t-1}`.
    pub eps_x: Matrix,
    pub beta_true: Vec<f64>,
    /// Zero-based indices of the nonzero coefficients, ascending.
    pub support: Vec<usize>,
    pub seed: u64,
    pub replication_id: u64,
}

impl SimulatedSample {
    pub fn horizon(&self) -> usize {
        self.x.nrows()
    }

    pub fn regressors(&self) -> usize {
        self.x.ncols()
    }
}

/// Simulate the cointegrating model from `Sigma` of dimension `N + 1`.
///
/// Coordinate 0 of each innovation is `eps_y`, coordinates `1..=N` drive the
/// regressors.
pub fn simulate_cointegrated(
    horizon: usize,
    beta: &[f64],
    sigma: &Covariance,
    seed: u64,
) -> Result<SimulatedSample> {
    let n = beta.len();
    if sigma.dim() != n + 1 {
        return Err(Error::DimensionMismatch {
            what: "Sigma (must be (N+1) x (N+1))",
            expected: n + 1,
            found: sigma.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidDimension {
            what: "regressors N",
            value: 0,
        });
    }
    linalg::ensure_finite(beta, "beta")?;
    let Panel { innovations, .. } = simulate_panel_with_innovations(horizon, sigma, seed)?;
    let eps_y: Vec<f64> = innovations.column(0).iter().copied().collect();
    let eps_x = innovations.columns(1, n).into_owned();
    let x = linalg::cumulative_sums(&eps_x);
    let y = (0..horizon)
        .map(|t| {
            let fitted: f64 = (0..n).map(|j| beta[j] * x[(t, j)]).sum();
            fitted + eps_y[t]
        })
        .collect();
    let support = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect();
    Ok(SimulatedSample {
        y,
        x,
        eps_y,
        eps_x,
        beta_true: beta.to_vec(),
        support,
        seed,
        replication_id: 0,
    })
}

/// Simulate replication `replication_id` of an experiment seeded by `master_seed`.
pub fn simulate_replication(
    horizon: usize,
    beta: &[f64],
    sigma: &Covariance,
    master_seed: u64,
    replication_id: u64,
) -> Result<SimulatedSample> {
    let seed = rng::derive_seed(
        rng::derive_seed(master_seed, replication_id),
        rng::purpose::DATA,
    );
    let mut sample = simulate_cointegrated(horizon, beta, sigma, seed)?;
    sample.replication_id = replication_id;
    Ok(sample)
}

/// Placement of the nonzero coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "pattern", rename_all = "snake_case"))]
pub enum SupportPattern {
    /// Indices `0..s`.
    #[default]
    FirstS,
    /// A uniformly random `s`-subset drawn from the seed.
    Random { seed: u64 },
}

/// Sparse coefficient vector with `s` entries equal to `magnitude`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBeta {
    pub values: Vec<f64>,
    /// Ascending zero-based support.
    pub support: Vec<usize>,
}

pub fn make_sparse_beta(
    n: usize,
    s: usize,
    magnitude: f64,
    pattern: SupportPattern,
) -> Result<SparseBeta> {
    if s == 0 || s > n {
        return Err(Error::InvalidDimension {
            what: "sparsity s (need 1 <= s <= N)",
            value: s,
        });
    }
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(domain("magnitude", magnitude, "magnitude > 0"));
    }
    let mut support: Vec<usize> = match pattern {
        SupportPattern::FirstS => (0..s).collect(),
        SupportPattern::Random { seed } => {
            let mut stream = GaussianStream::from_seed(seed);
            rand::seq::index::sample(stream.rng_mut(), n, s).into_vec()
        }
    };
    support.sort_unstable();
    let mut values = alloc::vec![0.0; n];
    for &j in &support {
        values[j] = magnitude;
    }
    Ok(SparseBeta { values, support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_covariance() {
        let c = build_covariance(&CovarianceSpec::identity(5)).unwrap();
        assert_eq!(c.matrix(), &Matrix::identity(5, 5));
        assert_eq!((c.c_sigma(), c.cap_sigma()), (1.0, 1.0));
    }

    #[test]
    fn equicorrelation_spectrum() {
        let spec = CovarianceSpec::new(3, CovarianceKind::Equicorrelation { rho: 0.5 });
        let c = build_covariance(&spec).unwrap();
        assert_relative_eq!(c.c_sigma(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(c.cap_sigma(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn toeplitz_is_positive_definite() {
        let spec = CovarianceSpec::new(50, CovarianceKind::Toeplitz { rho: 0.9 });
        let c = build_covariance(&spec).unwrap();
        assert!(c.c_sigma() > 0.0);
        let ll = c.cholesky_lower() * c.cholesky_lower().transpose();
        assert!((ll - c.matrix()).norm() / c.matrix().norm() < 1e-10);
    }

    #[test]
    fn rho_out_of_range() {
        for kind in [
            CovarianceKind::Toeplitz { rho: 1.0 },
            CovarianceKind::Toeplitz { rho: -1.0 },
            CovarianceKind::Equicorrelation { rho: -0.1 },
            CovarianceKind::Equicorrelation { rho: 1.0 },
        ] {
            assert!(matches!(
                build_covariance(&CovarianceSpec::new(4, kind)),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn non_pd_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            simulate_panel(3, &m, 0).unwrap_err(),
            Error::NotPositiveDefinite
        );
    }

    #[test]
    fn sparse_beta_patterns() {
        let b = make_sparse_beta(5, 2, 1.0, SupportPattern::FirstS).unwrap();
        assert_eq!(b.values, [1.0, 1.0, 0.0, 0.0, 0.0]);
        let b = make_sparse_beta(5, 5, 0.5, SupportPattern::FirstS).unwrap();
        assert_eq!(b.values, [0.5; 5]);
        let r1 = make_sparse_beta(30, 4, 2.0, SupportPattern::Random { seed: 9 }).unwrap();
        let r2 = make_sparse_beta(30, 4, 2.0, SupportPattern::Random { seed: 9 }).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.support.len(), 4);
        assert_eq!(r1.values.iter().filter(|v| **v == 2.0).count(), 4);
        assert!(make_sparse_beta(3, 4, 1.0, SupportPattern::FirstS).is_err());
    }

    #[test]
    fn zero_beta_gives_y_equal_eps() {
        let cov = build_covariance(&CovarianceSpec::identity(4)).unwrap();
        let s = simulate_cointegrated(30, &[0.0; 3], &cov, 5).unwrap();
        assert_eq!(s.y, s.eps_y);
        assert!(s.support.is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let cov = build_covariance(&CovarianceSpec::identity(3)).unwrap();
        assert!(matches!(
            simulate_cointegrated(10, &[1.0; 3], &cov, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
