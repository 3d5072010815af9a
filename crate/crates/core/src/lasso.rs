//! Lasso on the unnormalized objective
//!
//! ```text
//! w ||y - X beta||_2^2 + lambda ||beta||_1
//! ```
//!
//! with loss weight `w = 1` by default. No `1 / T` normalization is applied,
//! so `lambda` lives on the same scale as the rate conditions. Setting
//! `w = f_T^2` and `lambda~ = f_T^2 lambda` gives the rescaled program with
//! the same minimizer.
//!
//! The solver is cyclic coordinate descent over `j = 0..N` in covariance form:
//! `X'X` and `X'y` are formed once and `X'r` is refreshed at the start of
//! every sweep.

use alloc::vec::Vec;

use crate::error::domain;
use crate::linalg::{self, Matrix, Vector};
use crate::theory::Dimensions;
use crate::{Error, Result};

/// `sign(z) max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct LassoProblem {
    y: Vector,
    x: Matrix,
    lambda: f64,
    loss_weight: f64,
}

impl LassoProblem {
    pub fn new(y: &[f64], x: Matrix, lambda: f64) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                what: "y length vs rows of X",
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if x.ncols() == 0 || x.nrows() == 0 {
            return Err(Error::InvalidDimension {
                what: "design matrix",
                value: 0,
            });
        }
        linalg::ensure_finite(y, "y")?;
        linalg::ensure_finite(x.as_slice(), "X")?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain("lambda", lambda, "finite lambda >= 0"));
        }
        Ok(Self {
            y: Vector::from_column_slice(y),
            x,
            lambda,
            loss_weight: 1.0,
        })
    }

    /// Multiply the squared loss by `weight`; `lambda` is left as is.
    pub fn with_loss_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(domain("loss_weight", weight, "weight > 0"));
        }
        self.loss_weight = weight;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain("lambda", lambda, "finite lambda >= 0"));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn loss_weight(&self) -> f64 {
        self.loss_weight
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn regressors(&self) -> usize {
        self.x.ncols()
    }

    fn residual(&self, beta: &[f64]) -> Vector {
        &self.y - &self.x * Vector::from_column_slice(beta)
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        let r = self.residual(beta);
        self.loss_weight * r.norm_squared() + self.lambda * l1_norm(beta)
    }

    /// Smallest `lambda` with an all-zero solution: `2 w ||X'y||_inf`.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.loss_weight * (self.x.tr_mul(&self.y)).amax()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Stop when the largest coordinate change is `<= tol (1 + ||beta||_inf)`.
    pub tol: f64,
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            warm_start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LassoSolution {
    pub beta_hat: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Number of sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Coordinates with an all-zero column; held at zero.
    pub skipped_coordinates: Vec<usize>,
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|b| b.abs()).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, b| m.max(b.abs()))
}

/// Solve the lasso by cyclic coordinate descent.
pub fn fit(problem: &LassoProblem, options: &FitOptions) -> Result<LassoSolution> {
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(domain("tol", options.tol, "tol > 0 and max_iter >= 1"));
    }
    let n = problem.regressors();
    let w = problem.loss_weight;
    let half_lambda = 0.5 * problem.lambda;
    let gram = linalg::gram(&problem.x);
    let xty: Vec<f64> = problem.x.tr_mul(&problem.y).iter().copied().collect();

    let mut beta = match &options.warm_start {
        Some(start) if start.len() == n => {
            linalg::ensure_finite(start, "warm start")?;
            start.clone()
        }
        Some(start) => {
            return Err(Error::DimensionMismatch {
                what: "warm start",
                expected: n,
                found: start.len(),
            })
        }
        None => alloc::vec![0.0; n],
    };
    let skipped: Vec<usize> = (0..n).filter(|&j| gram[(j, j)] == 0.0).collect();
    for &j in &skipped {
        beta[j] = 0.0;
    }

    // Objective through the Gram form; only used for the debug descent check.
    let yty = problem.y.norm_squared();
    let gram_objective = |b: &[f64]| -> f64 {
        let bv = Vector::from_column_slice(b);
        let quad = bv.dot(&(&gram * &bv));
        let lin: f64 = b.iter().zip(&xty).map(|(a, c)| a * c).sum();
        w * (yty - 2.0 * lin + quad) + problem.lambda * l1_norm(b)
    };
    let mut previous = if cfg!(debug_assertions) {
        gram_objective(&beta)
    } else {
        0.0
    };

    let mut xtr = alloc::vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        iterations += 1;
        for j in 0..n {
            let gb: f64 = gram.column(j).iter().zip(&beta).map(|(g, b)| g * b).sum();
            xtr[j] = xty[j] - gb;
        }
        let mut max_change: f64 = 0.0;
        for j in 0..n {
            let gjj = gram[(j, j)];
            if gjj == 0.0 {
                continue;
            }
            let old = beta[j];
            let z = xtr[j] + gjj * old;
            let new = soft_threshold(w * z, half_lambda) / (w * gjj);
            let change = new - old;
            if change != 0.0 {
                beta[j] = new;
                for (r, g) in xtr.iter_mut().zip(gram.column(j).iter()) {
                    *r -= g * change;
                }
                max_change = max_change.max(change.abs());
            }
        }
        if cfg!(debug_assertions) {
            let current = gram_objective(&beta);
            debug_assert!(
                current <= previous + 1e-9 * (previous.abs() + w * yty).max(1.0),
                "lasso objective increased: {previous} -> {current}"
            );
            previous = current;
        }
        if max_change <= options.tol * (1.0 + inf_norm(&beta)) {
            converged = true;
            break;
        }
    }

    Ok(LassoSolution {
        objective: problem.objective(&beta),
        kkt_residual: kkt_residual(problem, &beta),
        beta_hat: beta,
        iterations,
        converged,
        skipped_coordinates: skipped,
    })
}

/// Solve along a decreasing `lambda` path, warm-starting each fit from the
/// previous solution.
pub fn fit_path(
    problem: &LassoProblem,
    lambdas: &[f64],
    options: &FitOptions,
) -> Result<Vec<LassoSolution>> {
    let mut out = Vec::with_capacity(lambdas.len());
    let mut opts = options.clone();
    for &lambda in lambdas {
        let p = problem.clone().with_lambda(lambda)?;
        let sol = fit(&p, &opts)?;
        opts.warm_start = Some(sol.beta_hat.clone());
        out.push(sol);
    }
    Ok(out)
}

/// Largest violation of the stationarity conditions with `g = 2 w X'(y - X beta)`:
/// `|g_j - lambda sign(beta_j)|` on the active set and `max(|g_j| - lambda, 0)`
/// off it.
pub fn kkt_residual(problem: &LassoProblem, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    let g = problem.x.tr_mul(&r) * (2.0 * problem.loss_weight);
    let lambda = problem.lambda;
    g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj > 0.0 {
                (gj - lambda).abs()
            } else if bj < 0.0 {
                (gj + lambda).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `f_T^2 ||X' eps_y||_inf`.
pub fn empirical_process_stat(x: &Matrix, eps_y: &[f64], f_t: f64) -> Result<f64> {
    if eps_y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            what: "eps_y length vs rows of X",
            expected: x.nrows(),
            found: eps_y.len(),
        });
    }
    let e = Vector::from_column_slice(eps_y);
    Ok(f_t * f_t * x.tr_mul(&e).amax())
}

/// Result of a cone membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeCheck {
    pub inside: bool,
    /// `c0 ||v_S||_1 - ||v_{S^c}||_1`.
    pub slack: f64,
}

/// Is `||v_{S^c}||_1 <= c0 ||v_S||_1`?
pub fn cone_membership(v: &[f64], support: &[usize], c0: f64) -> Result<ConeCheck> {
    if support.is_empty() {
        return Err(Error::InvalidDimension {
            what: "cone support (must be nonempty)",
            value: 0,
        });
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= v.len()) {
        return Err(Error::InvalidDimension {
            what: "cone support index",
            value: bad,
        });
    }
    let mut mask = alloc::vec![false; v.len()];
    for &j in support {
        mask[j] = true;
    }
    let (mut on, mut off) = (0.0, 0.0);
    for (vi, inside) in v.iter().zip(&mask) {
        if *inside {
            on += vi.abs();
        } else {
            off += vi.abs();
        }
    }
    let slack = c0 * on - off;
    Ok(ConeCheck {
        inside: off <= c0 * on,
        slack,
    })
}

/// `4 lambda^2 s^3 log^{3/2} N / (T^2 phi0^2)`.
pub fn error_bound_rhs(lambda: f64, dims: Dimensions, phi0: f64) -> Result<f64> {
    if !(phi0 > 0.0) {
        return Err(domain("phi0", phi0, "phi0 > 0"));
    }
    if !(dims.n >= 2.0) {
        return Err(domain("N", dims.n, "N >= 2"));
    }
    let Dimensions { t, s, .. } = dims;
    Ok(4.0 * lambda * lambda * s * s * s * libm::pow(dims.log_n(), 1.5) / (t * t * phi0 * phi0))
}

/// Realized errors of an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationErrors {
    /// `||beta_hat - beta||_1`.
    pub l1: f64,
    /// `||X (beta_hat - beta)||_2^2`.
    pub prediction: f64,
}

pub fn estimation_errors(x: &Matrix, beta_hat: &[f64], beta: &[f64]) -> EstimationErrors {
    let diff: Vec<f64> = beta_hat.iter().zip(beta).map(|(a, b)| a - b).collect();
    let fitted = x * Vector::from_column_slice(&diff);
    EstimationErrors {
        l1: l1_norm(&diff),
        prediction: fitted.norm_squared(),
    }
}
