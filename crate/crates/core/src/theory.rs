//! Deterministic constants and probability bounds.
//!
//! Covers the REC probability bound and its constant pipeline
//! (`K_delta`, `C_kappa`, `m_kappa`, `phi_s`, `R_s`, `C_mu`, `kappa_0`), the
//! truncated Azuma-Hoeffding empirical-process bound, the lasso error
//! probability, the matrix Chernoff tails and the consistency diagnostics.
//!
//! Bounds are returned raw. A lower bound on a probability that is `<= 0`, or
//! an upper tail bound that is `>= 1`, carries no information and is flagged
//! as vacuous rather than clamped.

use core::f64::consts::PI;

use crate::error::domain;
use crate::Result;

/// Default Chernoff deviation `delta`.
pub const DEFAULT_DELTA: f64 = 0.5;
/// Default free constant `kappa` in `kappa_0 = C_mu^{-1/2} kappa`.
pub const DEFAULT_KAPPA_FREE: f64 = 0.1;
/// Default exponent constant `C_1`.
pub const DEFAULT_C1: f64 = 1.0;

/// Problem size `(T, N, s)`. Real-valued so bounds can be evaluated off the
/// integer lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dimensions {
    /// Number of time points `T`.
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub t: f64,
    /// Number of regressors `N`.
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub n: f64,
    /// Sparsity `s`.
    pub s: f64,
}

impl Dimensions {
    pub fn new(t: f64, n: f64, s: f64) -> Self {
        Self { t, n, s }
    }

    pub fn from_counts(t: usize, n: usize, s: usize) -> Self {
        Self::new(t as f64, n as f64, s as f64)
    }

    fn check(&self) -> Result<()> {
        if !(self.t >= 1.0 && self.t.is_finite()) {
            return Err(domain("T", self.t, "T >= 1"));
        }
        if !(self.n >= 2.0 && self.n.is_finite()) {
            return Err(domain("N", self.n, "N >= 2 (log N must be positive)"));
        }
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return Err(domain("s", self.s, "s >= 1"));
        }
        Ok(())
    }

    pub fn log_n(&self) -> f64 {
        libm::log(self.n)
    }

    /// Gram scaling `f_T = s log^{3/4} N / T`.
    pub fn f_t(&self) -> f64 {
        self.s * libm::pow(self.log_n(), 0.75) / self.t
    }
}

/// Inputs of the constant pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryInputs {
    /// Cone constant `c_0`.
    pub c0: f64,
    /// Lower covariance eigenvalue bound `c_sigma`.
    pub c_sigma: f64,
    /// Upper covariance eigenvalue bound `C_sigma`.
    #[cfg_attr(feature = "serde", serde(rename = "C_sigma"))]
    pub cap_sigma: f64,
    pub delta: f64,
    pub kappa_free: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C1"))]
    pub c1: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub dims: Dimensions,
}

impl TheoryInputs {
    /// Inputs with the default free constants `delta = 0.5`, `kappa = 0.1`,
    /// `C_1 = 1`.
    pub fn with_defaults(c0: f64, c_sigma: f64, cap_sigma: f64, dims: Dimensions) -> Self {
        Self {
            c0,
            c_sigma,
            cap_sigma,
            delta: DEFAULT_DELTA,
            kappa_free: DEFAULT_KAPPA_FREE,
            c1: DEFAULT_C1,
            dims,
        }
    }
}

/// Every constant of the REC probability pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryConstants {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub inputs: TheoryInputs,
    #[cfg_attr(feature = "serde", serde(rename = "K_delta"))]
    pub k_delta: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C_kappa"))]
    pub c_kappa: f64,
    /// `ceil(C_kappa s)`.
    pub m_kappa: u64,
    /// `C_kappa + 1`.
    #[cfg_attr(feature = "serde", serde(rename = "C2"))]
    pub c2: f64,
    pub phi_s: f64,
    #[cfg_attr(feature = "serde", serde(rename = "R_s"))]
    pub r_s: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C_mu"))]
    pub c_mu: f64,
    pub kappa_0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "f_T"))]
    pub f_t: f64,
    /// Lower bound `c_sigma T / (9 pi^2 phi_s^{1/2})` on `mu_min`.
    pub mu_min_lb: f64,
    /// `s + m_kappa <= N`.
    pub feasible: bool,
    /// `ceil(c0^2 C_sigma s / c_sigma) < N`.
    pub theorem_precondition: bool,
}

/// `max(e^{-d} / (1-d)^{1-d}, e^{d} / (1+d)^{1+d})`, in `(0, 1)` for `d` in `(0, 1)`.
pub fn k_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("delta", delta, "0 < delta < 1"));
    }
    Ok(chernoff_base(delta, ChernoffSide::Min).max(chernoff_base(delta, ChernoffSide::Max)))
}

/// Evaluate the full constant pipeline.
///
/// An infeasible configuration (`s + m_kappa > N`) is not an error: the
/// constants are returned with `feasible = false`.
pub fn derive_constants(inputs: &TheoryInputs) -> Result<TheoryConstants> {
    let TheoryInputs {
        c0,
        c_sigma,
        cap_sigma,
        delta,
        kappa_free,
        c1,
        dims,
    } = *inputs;
    dims.check()?;
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(domain("c0", c0, "c0 > 0"));
    }
    if !(c_sigma > 0.0 && c_sigma.is_finite()) {
        return Err(domain("c_sigma", c_sigma, "c_sigma > 0"));
    }
    if !(cap_sigma >= c_sigma && cap_sigma.is_finite()) {
        return Err(domain("C_sigma", cap_sigma, "C_sigma >= c_sigma"));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(domain("C1", c1, "C1 > 0"));
    }
    let k = k_delta(delta)?;
    let root = libm::sqrt(1.0 - delta);
    if !(kappa_free > 0.0 && kappa_free < root) {
        return Err(domain(
            "kappa_free",
            kappa_free,
            "0 < kappa_free < sqrt(1 - delta)",
        ));
    }

    let log_k = libm::log(k);
    let log_n = dims.log_n();
    let s = dims.s;
    let gap = root - kappa_free;
    let c_kappa = c0 * c0 * cap_sigma * (1.0 + delta) / (c_sigma * gap * gap);
    let m_kappa = libm::ceil(c_kappa * s) as u64;
    let c2 = c_kappa + 1.0;
    let c1_factor = (c1 + 1.0) * (c1 + 3.0);

    let sqrt_phi_s =
        -9.0 * PI * PI * c1_factor * cap_sigma * cap_sigma * s * s * libm::pow(log_n, 1.5)
            / (c_sigma * dims.t * log_k);
    let phi_s = sqrt_phi_s * sqrt_phi_s;

    let r_s = summand_norm_bound(cap_sigma, c1, dims, phi_s);

    let c_mu = -81.0 * (PI * PI) * (PI * PI) * c1_factor * cap_sigma * cap_sigma * c2 * c2
        / (c_sigma * c_sigma * log_k);
    let kappa_0 = kappa_free / libm::sqrt(c_mu);

    Ok(TheoryConstants {
        inputs: *inputs,
        k_delta: k,
        c_kappa,
        m_kappa,
        c2,
        phi_s,
        r_s,
        c_mu,
        kappa_0,
        f_t: dims.f_t(),
        mu_min_lb: c_sigma * dims.t / (9.0 * PI * PI * sqrt_phi_s),
        feasible: s + m_kappa as f64 <= dims.n,
        theorem_precondition: libm::ceil(c0 * c0 * cap_sigma * s / c_sigma) < dims.n,
    })
}

/// Truncation level `C_sigma^2 lambda_{phi,1} s ((C1 + 1) sqrt(log N) + 1)` for
/// the summands `lambda_{phi,t} e_t e_t'` of a shifted support Gram matrix.
///
/// `derive_constants` evaluates it at `phi_s`; any `phi >= 0` is accepted.
pub fn summand_norm_bound(cap_sigma: f64, c1: f64, dims: Dimensions, phi: f64) -> f64 {
    // lambda_{phi,1} = 1 / (2 (1 + phi - cos omega_1)) at the real horizon T.
    let omega_1 = PI / (2.0 * dims.t + 1.0);
    let half = libm::sin(0.5 * omega_1);
    let lambda_1 = 1.0 / (4.0 * half * half + 2.0 * phi);
    cap_sigma * cap_sigma * lambda_1 * dims.s * ((c1 + 1.0) * libm::sqrt(dims.log_n()) + 1.0)
}

/// Which side of a probability a bound controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundKind {
    /// `P(event) >= value`; vacuous when `value <= 0`.
    Lower,
    /// `P(event) <= value`; vacuous when `value >= 1`.
    Upper,
}

/// A raw bound value with its vacuity flag.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilityBound {
    pub value: f64,
    pub kind: BoundKind,
    pub vacuous: bool,
}

impl ProbabilityBound {
    pub fn lower(value: f64) -> Self {
        Self {
            value,
            kind: BoundKind::Lower,
            vacuous: !(value > 0.0),
        }
    }

    pub fn upper(value: f64) -> Self {
        Self {
            value,
            kind: BoundKind::Upper,
            vacuous: !(value < 1.0),
        }
    }
}

fn rec_tail(dims: &Dimensions, c1: f64, c2: f64) -> f64 {
    (4.0 * dims.t + c2 * dims.s) * libm::exp(-c1 * dims.s * dims.log_n())
}

/// `1 - (4T + C2 s) exp(-C1 s log N)`, a lower bound on `P(kappa >= kappa_0)`.
pub fn rec_probability_bound(dims: Dimensions, c1: f64, c2: f64) -> Result<ProbabilityBound> {
    dims.check()?;
    Ok(ProbabilityBound::lower(1.0 - rec_tail(&dims, c1, c2)))
}

/// Exponent convention of the empirical-process bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EmpiricalProcessForm {
    /// `log^3 N` in the first exponent and `log^{3/2} N` in the third,
    /// consistent with `f_T^4 = s^4 log^3 N / T^4`.
    #[default]
    Derived,
    /// `log^4 N` and `log^2 N` in the same two places.
    Stated,
}

/// Upper bound on `P(f_T^2 ||X' eps_y||_inf >= a)`:
///
/// ```text
/// 2N [ exp(-2 a^2 T^{3-2m} / (s^4 log^3 N))
///    + 2T exp(-T^{m-1/2} / (2 C_sigma))
///    + 2 exp(-a T^2 / (4 C_sigma s^2 log^{3/2} N)) ]
/// ```
pub fn empirical_process_bound(
    a: f64,
    dims: Dimensions,
    cap_sigma: f64,
    m: f64,
    form: EmpiricalProcessForm,
) -> Result<ProbabilityBound> {
    dims.check()?;
    if !(a > 0.0) {
        return Err(domain("a", a, "a > 0"));
    }
    if !(cap_sigma > 0.0) {
        return Err(domain("C_sigma", cap_sigma, "C_sigma > 0"));
    }
    let Dimensions { t, n, s } = dims;
    let log_n = dims.log_n();
    let (p1, p3) = match form {
        EmpiricalProcessForm::Derived => (3.0, 1.5),
        EmpiricalProcessForm::Stated => (4.0, 2.0),
    };
    let first = libm::exp(
        -2.0 * a * a * libm::pow(t, 3.0 - 2.0 * m) / (libm::pow(s, 4.0) * libm::pow(log_n, p1)),
    );
    let middle = 2.0 * t * libm::exp(-libm::pow(t, m - 0.5) / (2.0 * cap_sigma));
    let third = 2.0 * libm::exp(-a * t * t / (4.0 * cap_sigma * s * s * libm::pow(log_n, p3)));
    Ok(ProbabilityBound::upper(2.0 * n * (first + middle + third)))
}

/// Convention for the lasso error probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LassoProbabilityForm {
    /// `exp(-2 lambda^2 / T^{1+2m})` and `exp(-lambda / (4 C_sigma))` in the
    /// closed-form error probability.
    #[default]
    Displayed,
    /// Substituting `a = f_T^2 lambda / 4` into the empirical-process bound:
    /// `exp(-lambda^2 / (8 T^{1+2m}))` and `exp(-lambda / (16 C_sigma))`.
    Substituted,
}

/// Lower bound on the probability that the lasso error bound holds.
#[allow(clippy::too_many_arguments)]
pub fn lasso_error_probability(
    lambda: f64,
    dims: Dimensions,
    cap_sigma: f64,
    m: f64,
    c1: f64,
    c2: f64,
    form: LassoProbabilityForm,
) -> Result<ProbabilityBound> {
    dims.check()?;
    if !(lambda > 0.0) {
        return Err(domain("lambda", lambda, "lambda > 0"));
    }
    if !(cap_sigma > 0.0) {
        return Err(domain("C_sigma", cap_sigma, "C_sigma > 0"));
    }
    let Dimensions { t, n, .. } = dims;
    let (c_first, c_third) = match form {
        LassoProbabilityForm::Displayed => (2.0, 4.0),
        LassoProbabilityForm::Substituted => (1.0 / 8.0, 16.0),
    };
    let first = libm::exp(-c_first * lambda * lambda / libm::pow(t, 1.0 + 2.0 * m));
    let middle = 2.0 * t * libm::exp(-libm::pow(t, m - 0.5) / (2.0 * cap_sigma));
    let third = 2.0 * libm::exp(-lambda / (c_third * cap_sigma));
    let value = 1.0 - 2.0 * n * (first + middle + third) - rec_tail(&dims, c1, c2);
    Ok(ProbabilityBound::lower(value))
}

/// Tail side of the matrix Chernoff bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ChernoffSide {
    /// `P(lambda_min <= (1 - delta) mu_min)`, `delta` in `[0, 1]`.
    Min,
    /// `P(lambda_max >= (1 + delta) mu_max)`, `delta >= 0`.
    Max,
}

/// `e^{-d} / (1-d)^{1-d}` or `e^{d} / (1+d)^{1+d}`, evaluated in log space.
fn chernoff_log_base(delta: f64, side: ChernoffSide) -> f64 {
    match side {
        ChernoffSide::Min => {
            let r = 1.0 - delta;
            // r log r -> 0 as r -> 0
            let r_log_r = if r > 0.0 { r * libm::log(r) } else { 0.0 };
            -delta - r_log_r
        }
        ChernoffSide::Max => delta - (1.0 + delta) * libm::log1p(delta),
    }
}

fn chernoff_base(delta: f64, side: ChernoffSide) -> f64 {
    libm::exp(chernoff_log_base(delta, side))
}

/// `dim * base^{mu/R}` with the side's base.
pub fn matrix_chernoff_tail(
    mu_over_r: f64,
    delta: f64,
    dim: usize,
    side: ChernoffSide,
) -> Result<f64> {
    if !(mu_over_r > 0.0) {
        return Err(domain("mu_over_R", mu_over_r, "mu/R > 0"));
    }
    if dim == 0 {
        return Err(crate::Error::InvalidDimension {
            what: "matrix dimension",
            value: 0,
        });
    }
    let ok = match side {
        ChernoffSide::Min => (0.0..=1.0).contains(&delta),
        ChernoffSide::Max => delta >= 0.0 && delta.is_finite(),
    };
    if !ok {
        return Err(domain(
            "delta",
            delta,
            "delta in [0, 1] (min side) or delta >= 0 (max side)",
        ));
    }
    Ok(dim as f64 * libm::exp(mu_over_r * chernoff_log_base(delta, side)))
}

/// Growth-condition ratios and the `A_1..A_4` terms of the consistency proof.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorollaryDiagnostics {
    /// `T^{1+xi} log^{1/2} N / lambda`.
    pub penalty_ratio: f64,
    /// `log N / T^xi`.
    pub dimension_ratio: f64,
    /// `log T / (s log N)`.
    pub sparsity_ratio: f64,
    /// `s^3 log^2 N / T^{1-xi}`.
    pub rate: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl CorollaryDiagnostics {
    pub fn a_total(&self) -> f64 {
        self.a1 + self.a2 + self.a3 + self.a4
    }
}

/// Evaluate the consistency conditions at one `(T, N, s, lambda)`.
///
/// `C_sigma`, `C1` and `C2` are taken from `constants`.
pub fn corollary_conditions(
    dims: Dimensions,
    lambda: f64,
    xi: f64,
    constants: &TheoryConstants,
) -> Result<CorollaryDiagnostics> {
    dims.check()?;
    if !(lambda > 0.0) {
        return Err(domain("lambda", lambda, "lambda > 0"));
    }
    if !(xi > 0.0) {
        return Err(domain("xi", xi, "xi > 0"));
    }
    let Dimensions { t, s, .. } = dims;
    let log_n = dims.log_n();
    let log_t = libm::log(t);
    let cap_sigma = constants.inputs.cap_sigma;
    let c1 = constants.inputs.c1;
    let c2 = constants.c2;
    Ok(CorollaryDiagnostics {
        penalty_ratio: rate_rule_lambda(1.0, dims, xi) / lambda,
        dimension_ratio: log_n / libm::pow(t, xi),
        sparsity_ratio: log_t / (s * log_n),
        rate: s * s * s * log_n * log_n / libm::pow(t, 1.0 - xi),
        a1: libm::exp(-2.0 * lambda * lambda / libm::pow(t, 2.0 + 2.0 * xi) + log_n),
        a2: libm::exp(-libm::pow(t, xi) / (2.0 * cap_sigma) + log_n + libm::log(2.0 * t)),
        a3: 2.0 * libm::exp(-lambda / (4.0 * cap_sigma) + log_n),
        a4: 4.0 * libm::exp(-c1 * s * log_n + log_t)
            + c2 * libm::exp(-c1 * s * log_n + libm::log(s)),
    })
}

/// `scale * T^{1+xi} * sqrt(log N)`.
pub fn rate_rule_lambda(scale: f64, dims: Dimensions, xi: f64) -> f64 {
    scale * libm::pow(dims.t, 1.0 + xi) * libm::sqrt(dims.log_n())
}

/// Truncation exponent used with the rate rule, `m = 1/2 + xi`.
pub fn default_truncation_exponent(xi: f64) -> f64 {
    0.5 + xi
}
