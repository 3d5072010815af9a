//! Sparse eigenvalues and the restricted eigenvalue
//!
//! ```text
//! kappa(S, f_T, s, c0) = min_{|J| <= s} min_{x in C(J, c0)} f_T ||S x||_2 / ||x_J||_2,
//! C(J, c0) = { x != 0 : ||x_{J^c}||_1 <= c0 ||x_J||_1 }.
//! ```
//!
//! The inner problem is nonconvex, so `kappa` is bracketed rather than
//! computed: a certified lower bound from the Bickel inequality (and from
//! the smallest singular value of `S`), and an upper estimate from
//! multi-start projected descent. Every feasible point of the descent is a
//! valid upper bound.
//!
//! Subsets are zero-based and scanned in lexicographic order; ties in the
//! min/max reductions keep the first attainer.

use alloc::vec::Vec;

use crate::error::domain;
use crate::lasso::cone_membership;
use crate::linalg::{self, Matrix};
use crate::rng::{self, GaussianStream};
use crate::spectral;
use crate::{Error, Result};

/// Default cap on the number of subsets scanned exhaustively.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // advance: find the rightmost index that can still move right
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in (i + 1)..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

fn check_subset_size(n: usize, u: usize) -> Result<()> {
    if u == 0 || u > n {
        return Err(Error::InvalidDimension {
            what: "subset size u (need 1 <= u <= N)",
            value: u,
        });
    }
    Ok(())
}

fn check_budget(n: usize, u: usize, budget: u64) -> Result<()> {
    let count = binomial(n, u);
    if count > budget as u128 {
        return Err(Error::EnumerationTooLarge {
            n,
            u,
            count,
            budget,
        });
    }
    Ok(())
}

/// All `u`-subsets of `0..n`, refusing when `C(n, u) > budget`.
pub fn enumerate_supports(n: usize, u: usize, budget: u64) -> Result<Vec<Vec<usize>>> {
    check_subset_size(n, u)?;
    check_budget(n, u, budget)?;
    Ok(Combinations::new(n, u).collect())
}

/// Extreme sparse eigenvalues at one subset size.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseEigenvalues {
    pub u: usize,
    /// `min_{|A| = u} lambda_min(f_T^2 S_A' S_A)`.
    pub phi_min: f64,
    /// `max_{|A| = u} lambda_max(f_T^2 S_A' S_A)`.
    pub phi_max: f64,
    pub argmin_set: Vec<usize>,
    pub argmax_set: Vec<usize>,
    pub subsets_scanned: u64,
    /// `false` when the subsets were sampled rather than enumerated; the
    /// values are then only estimates.
    pub exhaustive: bool,
}

struct ExtremeScan {
    min: f64,
    max: f64,
    argmin: Vec<usize>,
    argmax: Vec<usize>,
    count: u64,
}

impl ExtremeScan {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            argmin: Vec::new(),
            argmax: Vec::new(),
            count: 0,
        }
    }

    fn visit(&mut self, gram: &Matrix, subset: &[usize]) {
        let (lo, hi) = linalg::extreme_eigenvalues(&linalg::principal_submatrix(gram, subset));
        if lo < self.min {
            self.min = lo;
            self.argmin = subset.to_vec();
        }
        if hi > self.max {
            self.max = hi;
            self.argmax = subset.to_vec();
        }
        self.count += 1;
    }

    fn finish(self, u: usize, scale: f64, exhaustive: bool) -> SparseEigenvalues {
        SparseEigenvalues {
            u,
            phi_min: scale * self.min,
            phi_max: scale * self.max,
            argmin_set: self.argmin,
            argmax_set: self.argmax,
            subsets_scanned: self.count,
            exhaustive,
        }
    }
}

fn check_gram(gram: &Matrix) -> Result<()> {
    if gram.nrows() == 0 || gram.nrows() != gram.ncols() {
        return Err(Error::InvalidDimension {
            what: "Gram matrix (must be square, non-empty)",
            value: gram.ncols(),
        });
    }
    Ok(())
}

fn check_scale(f_t: f64) -> Result<()> {
    if !(f_t > 0.0 && f_t.is_finite()) {
        return Err(domain("f_T", f_t, "f_T > 0"));
    }
    Ok(())
}

/// Sparse eigenvalues of `S` by exhaustive enumeration.
pub fn sparse_eigenvalues(
    s_matrix: &Matrix,
    f_t: f64,
    u: usize,
    budget: u64,
) -> Result<SparseEigenvalues> {
    sparse_eigenvalues_from_gram(&linalg::gram(s_matrix), f_t, u, budget)
}

/// As [`sparse_eigenvalues`], from a precomputed Gram `S'S`.
pub fn sparse_eigenvalues_from_gram(
    gram: &Matrix,
    f_t: f64,
    u: usize,
    budget: u64,
) -> Result<SparseEigenvalues> {
    check_gram(gram)?;
    check_scale(f_t)?;
    let n = gram.nrows();
    check_subset_size(n, u)?;
    check_budget(n, u, budget)?;
    let mut scan = ExtremeScan::new();
    for subset in Combinations::new(n, u) {
        scan.visit(gram, &subset);
    }
    Ok(scan.finish(u, f_t * f_t, true))
}

/// Sparse eigenvalue estimates from `samples` uniformly drawn `u`-subsets.
///
/// `phi_min` is then an overestimate and `phi_max` an underestimate of the
/// true values; the result is flagged non-exhaustive.
pub fn sampled_sparse_eigenvalues(
    gram: &Matrix,
    f_t: f64,
    u: usize,
    samples: u64,
    stream: &mut GaussianStream,
) -> Result<SparseEigenvalues> {
    check_gram(gram)?;
    check_scale(f_t)?;
    let n = gram.nrows();
    check_subset_size(n, u)?;
    let mut scan = ExtremeScan::new();
    for _ in 0..samples.max(1) {
        let mut subset = rand::seq::index::sample(stream.rng_mut(), n, u).into_vec();
        subset.sort_unstable();
        scan.visit(gram, &subset);
    }
    Ok(scan.finish(u, f_t * f_t, false))
}

/// How the sparse eigenvalues entering a Bickel bound were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BickelMethod {
    /// All subsets of both sizes enumerated.
    Enumerated,
    /// Over budget: `lambda_min(f^2 S'S) <= phi_min(u)` and
    /// `phi_max(u) <= lambda_max(f^2 S'S)` by eigenvalue interlacing. Still a
    /// valid (looser) lower bound.
    Interlacing,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BickelBound {
    /// `sqrt(phi_min(s + m)) - c0 sqrt(phi_max(m)) sqrt(s / m)`.
    pub value: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub m: usize,
    pub method: BickelMethod,
}

impl BickelBound {
    /// A nonpositive bound says nothing about `kappa`.
    pub fn informative(&self) -> bool {
        self.value > 0.0
    }
}

fn check_bickel(n: usize, s: usize, m: usize, c0: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidDimension {
            what: "sparsity s",
            value: 0,
        });
    }
    if m < s {
        return Err(Error::InvalidDimension {
            what: "Bickel m (need m >= s)",
            value: m,
        });
    }
    if s + m > n {
        return Err(Error::InvalidDimension {
            what: "Bickel m (need s + m <= N)",
            value: m,
        });
    }
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(domain("c0", c0, "c0 >= 0"));
    }
    Ok(())
}

fn bickel_value(phi_min: f64, phi_max: f64, s: usize, m: usize, c0: f64) -> f64 {
    libm::sqrt(phi_min.max(0.0))
        - c0 * libm::sqrt(phi_max.max(0.0)) * libm::sqrt(s as f64 / m as f64)
}

/// `sqrt(phi_min(S, f_T, s+m)) - c0 sqrt(phi_max(S, f_T, m)) sqrt(s/m)` by
/// exhaustive enumeration. May be negative, in which case it is
/// uninformative.
pub fn bickel_lower_bound(
    s_matrix: &Matrix,
    f_t: f64,
    s: usize,
    m: usize,
    c0: f64,
    budget: u64,
) -> Result<f64> {
    let gram = linalg::gram(s_matrix);
    check_bickel(gram.nrows(), s, m, c0)?;
    let lo = sparse_eigenvalues_from_gram(&gram, f_t, s + m, budget)?;
    let hi = sparse_eigenvalues_from_gram(&gram, f_t, m, budget)?;
    Ok(bickel_value(lo.phi_min, hi.phi_max, s, m, c0))
}

/// Bickel bound from a Gram matrix, falling back to interlacing bounds when
/// either enumeration exceeds `budget`.
pub fn bickel_bound_from_gram(
    gram: &Matrix,
    f_t: f64,
    s: usize,
    m: usize,
    c0: f64,
    budget: u64,
) -> Result<BickelBound> {
    check_gram(gram)?;
    check_scale(f_t)?;
    let n = gram.nrows();
    check_bickel(n, s, m, c0)?;
    let within = |u: usize| binomial(n, u) <= budget as u128;
    let (phi_min, phi_max, method) = if within(s + m) && within(m) {
        let lo = sparse_eigenvalues_from_gram(gram, f_t, s + m, budget)?;
        let hi = sparse_eigenvalues_from_gram(gram, f_t, m, budget)?;
        (lo.phi_min, hi.phi_max, BickelMethod::Enumerated)
    } else {
        let (lo, hi) = linalg::extreme_eigenvalues(gram);
        (f_t * f_t * lo, f_t * f_t * hi, BickelMethod::Interlacing)
    };
    Ok(BickelBound {
        value: bickel_value(phi_min, phi_max, s, m, c0),
        phi_min,
        phi_max,
        m,
        method,
    })
}

/// Bickel `m`: `max(m_kappa, s)` when `s + m <= N`, otherwise the largest
/// feasible `m <= N - s`; `None` when `N < 2 s`.
pub fn default_bickel_m(s: usize, n: usize, m_kappa: Option<u64>) -> Option<usize> {
    if s == 0 || n < 2 * s {
        return None;
    }
    if let Some(mk) = m_kappa {
        let m = (mk as usize).max(s);
        if s + m <= n {
            return Some(m);
        }
    }
    Some(n - s)
}

/// `f_T sqrt(lambda_min(S'S))`, a lower bound on `kappa` since
/// `||x_J||_2 <= ||x||_2`.
pub fn singular_value_bound(gram: &Matrix, f_t: f64) -> f64 {
    let (lo, _) = linalg::extreme_eigenvalues(gram);
    f_t * libm::sqrt(lo.max(0.0))
}

/// The restricted eigenvalue problem `kappa(S, f_T, s, c0)`.
#[derive(Clone, Debug)]
pub struct ConeProblem {
    gram: Matrix,
    f_t: f64,
    sparsity: usize,
    c0: f64,
}

impl ConeProblem {
    pub fn new(s_matrix: &Matrix, f_t: f64, sparsity: usize, c0: f64) -> Result<Self> {
        Self::from_gram(linalg::gram(s_matrix), f_t, sparsity, c0)
    }

    pub fn from_gram(gram: Matrix, f_t: f64, sparsity: usize, c0: f64) -> Result<Self> {
        check_gram(&gram)?;
        check_scale(f_t)?;
        check_subset_size(gram.nrows(), sparsity)?;
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(domain("c0", c0, "c0 >= 0"));
        }
        linalg::ensure_finite(gram.as_slice(), "S'S")?;
        Ok(Self {
            gram,
            f_t,
            sparsity,
            c0,
        })
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn f_t(&self) -> f64 {
        self.f_t
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn regressors(&self) -> usize {
        self.gram.nrows()
    }

    /// `f_T ||S x|| / ||x_J||` for a direction and support.
    pub fn objective(&self, x: &[f64], support: &[usize]) -> f64 {
        let v = linalg::Vector::from_column_slice(x);
        let quad = v.dot(&(&self.gram * &v));
        let on: f64 = support.iter().map(|&j| x[j] * x[j]).sum();
        self.f_t * libm::sqrt((quad / on).max(0.0))
    }
}

/// Settings of the multi-start cone descent.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescentOptions {
    /// Random starts per support, on top of the deterministic start.
    pub restarts: usize,
    pub iters: usize,
    /// Supports scanned exhaustively up to this many; sampled beyond.
    pub support_budget: u64,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            iters: 200,
            support_budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

/// Upper estimate of `kappa` with its witness.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledRec {
    pub upper_estimate: f64,
    pub witness_support: Vec<usize>,
    /// Unit-norm direction in the cone of `witness_support`.
    pub witness_direction: Vec<f64>,
    pub supports_scanned: u64,
    pub supports_exhaustive: bool,
}

struct ConeDescent<'a> {
    gram: &'a Matrix,
    on_support: Vec<bool>,
    c0: f64,
}

impl ConeDescent<'_> {
    /// Rescale the off-support block into the cone, then normalize.
    /// `false` when `x_J` vanishes.
    fn project(&self, x: &mut [f64]) -> bool {
        let (mut on, mut off) = (0.0, 0.0);
        for (xi, &inside) in x.iter().zip(&self.on_support) {
            if inside {
                on += xi.abs();
            } else {
                off += xi.abs();
            }
        }
        if !(on > f64::MIN_POSITIVE) || !on.is_finite() {
            return false;
        }
        if off > self.c0 * on {
            let ratio = self.c0 * on / off;
            for (xi, &inside) in x.iter_mut().zip(&self.on_support) {
                if !inside {
                    *xi *= ratio;
                }
            }
        }
        let norm = libm::sqrt(x.iter().map(|v| v * v).sum());
        if !(norm > 0.0) {
            return false;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        true
    }

    /// `(x'Gx / ||x_J||^2, Gx)`.
    fn ratio(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        let mut gx = alloc::vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (acc, g) in gx.iter_mut().zip(self.gram.column(j).iter()) {
                    *acc += g * xj;
                }
            }
        }
        let quad: f64 = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
        let on: f64 = x
            .iter()
            .zip(&self.on_support)
            .filter(|(_, inside)| **inside)
            .map(|(v, _)| v * v)
            .sum();
        (quad / on, gx)
    }

    /// Normalized-gradient descent from a projected start; the step is halved
    /// whenever a trial point fails to decrease the ratio.
    fn run(&self, mut x: Vec<f64>, iters: usize) -> Option<(f64, Vec<f64>)> {
        if !self.project(&mut x) {
            return None;
        }
        let (mut q, mut gx) = self.ratio(&x);
        let mut step = 0.25;
        for _ in 0..iters {
            let on: f64 = x
                .iter()
                .zip(&self.on_support)
                .filter(|(_, inside)| **inside)
                .map(|(v, _)| v * v)
                .sum();
            let grad: Vec<f64> = x
                .iter()
                .zip(&gx)
                .zip(&self.on_support)
                .map(|((&xi, &gi), &inside)| {
                    let p = if inside { xi } else { 0.0 };
                    2.0 * (gi - q * p) / on
                })
                .collect();
            let gnorm = libm::sqrt(grad.iter().map(|g| g * g).sum());
            if !(gnorm > 1e-300) {
                break;
            }
            let mut accepted = false;
            while step > 1e-12 {
                let mut trial: Vec<f64> = x
                    .iter()
                    .zip(&grad)
                    .map(|(xi, gi)| xi - step * gi / gnorm)
                    .collect();
                if self.project(&mut trial) {
                    let (qt, gt) = self.ratio(&trial);
                    if qt < q {
                        x = trial;
                        q = qt;
                        gx = gt;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Some((q, x))
    }
}

fn supports_for(
    n: usize,
    s: usize,
    budget: u64,
    stream: &mut GaussianStream,
) -> (Vec<Vec<usize>>, bool) {
    if binomial(n, s) <= budget as u128 {
        (Combinations::new(n, s).collect(), true)
    } else {
        let count = budget.max(1) as usize;
        let supports = (0..count)
            .map(|_| {
                let mut subset = rand::seq::index::sample(stream.rng_mut(), n, s).into_vec();
                subset.sort_unstable();
                subset
            })
            .collect();
        (supports, false)
    }
}

/// Multi-start projected descent on the cone objective.
///
/// For every support `J` of size `s` (sampled past `support_budget`), starts
/// from the minimal eigenvector of `G_JJ` and from `restarts` random points.
/// Returns the smallest value found, an upper bound on `kappa`.
pub fn rec_sampled(problem: &ConeProblem, options: &DescentOptions) -> SampledRec {
    let n = problem.regressors();
    let s = problem.sparsity;
    let base = rng::derive_seed(options.seed, 0);
    let mut support_stream =
        GaussianStream::from_seed(rng::derive_seed(base, rng::purpose::SUPPORT));
    let mut start_stream = GaussianStream::from_seed(rng::derive_seed(base, rng::purpose::DESCENT));
    let (supports, exhaustive) = supports_for(n, s, options.support_budget, &mut support_stream);

    let mut best_q = f64::INFINITY;
    let mut best_support: Vec<usize> = Vec::new();
    let mut best_x: Vec<f64> = Vec::new();
    for support in &supports {
        let mut on_support = alloc::vec![false; n];
        for &j in support {
            on_support[j] = true;
        }
        let descent = ConeDescent {
            gram: &problem.gram,
            on_support,
            c0: problem.c0,
        };
        let block = linalg::principal_submatrix(&problem.gram, support);
        let eig = linalg::symmetric_eigen(&block);
        let mut start = alloc::vec![0.0; n];
        for (k, &j) in support.iter().enumerate() {
            start[j] = eig.vectors[(k, 0)];
        }
        let mut consider = |result: Option<(f64, Vec<f64>)>| {
            if let Some((q, x)) = result {
                if q < best_q {
                    best_q = q;
                    best_support = support.clone();
                    best_x = x;
                }
            }
        };
        consider(descent.run(start, options.iters));
        for _ in 0..options.restarts {
            // degenerate trajectories (x_J -> 0) are dropped and redrawn
            let mut attempt = 0;
            loop {
                let x0: Vec<f64> = (0..n).map(|_| start_stream.standard_normal()).collect();
                if let Some(found) = descent.run(x0, options.iters) {
                    consider(Some(found));
                    break;
                }
                attempt += 1;
                if attempt >= 8 {
                    break;
                }
            }
        }
    }
    SampledRec {
        upper_estimate: problem.f_t * libm::sqrt(best_q.max(0.0)),
        witness_support: best_support,
        witness_direction: best_x,
        supports_scanned: supports.len() as u64,
        supports_exhaustive: exhaustive,
    }
}

/// Certified lower bound and sampled upper estimate of `kappa`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecEstimate {
    /// `max(bickel_bound, singular_value_bound)`.
    pub lower_bound: f64,
    pub bickel: Option<BickelBound>,
    pub singular_value_bound: f64,
    pub upper_estimate: f64,
    pub m_used: Option<usize>,
    pub witness_support: Vec<usize>,
    pub witness_direction: Vec<f64>,
    pub supports_scanned: u64,
    pub supports_exhaustive: bool,
}

impl RecEstimate {
    pub fn gap(&self) -> f64 {
        self.upper_estimate - self.lower_bound
    }
}

/// Certified lower bound only (no descent).
pub fn rec_lower_bound(
    problem: &ConeProblem,
    m: Option<usize>,
    budget: u64,
) -> Result<(f64, Option<BickelBound>, f64)> {
    let bickel = match m {
        Some(m) => Some(bickel_bound_from_gram(
            &problem.gram,
            problem.f_t,
            problem.sparsity,
            m,
            problem.c0,
            budget,
        )?),
        None => None,
    };
    let sv = singular_value_bound(&problem.gram, problem.f_t);
    let lower = bickel.as_ref().map_or(sv, |b| b.value.max(sv));
    Ok((lower, bickel, sv))
}

/// Bracket `kappa` between the certified lower bound and a descent estimate.
pub fn estimate_rec(
    problem: &ConeProblem,
    m: Option<usize>,
    budget: u64,
    options: &DescentOptions,
) -> Result<RecEstimate> {
    let (lower_bound, bickel, singular_value_bound) = rec_lower_bound(problem, m, budget)?;
    let sampled = rec_sampled(problem, options);
    debug_assert!(cone_membership(
        &sampled.witness_direction,
        &sampled.witness_support,
        problem.c0
    )
    .map(|c| c.slack >= -1e-12)
    .unwrap_or(false));
    Ok(RecEstimate {
        lower_bound,
        bickel,
        singular_value_bound,
        upper_estimate: sampled.upper_estimate,
        m_used: m,
        witness_support: sampled.witness_support,
        witness_direction: sampled.witness_direction,
        supports_scanned: sampled.supports_scanned,
        supports_exhaustive: sampled.supports_exhaustive,
    })
}

/// `lambda_min(S'S - S^(phi)' S^(phi))` for innovations `E`.
pub fn shifted_psd_gap(e: &Matrix, phi: f64) -> Result<f64> {
    let walks = linalg::cumulative_sums(e);
    let plain = linalg::gram(&walks);
    let shifted = spectral::shifted_gram(e, phi)?;
    let mut diff = plain - shifted;
    linalg::symmetrize(&mut diff);
    Ok(linalg::extreme_eigenvalues(&diff).0)
}
