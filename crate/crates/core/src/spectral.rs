//! Spectrum of the cumulative-sum Gram operator.
//!
//! A random-walk panel is `S = U E` with `U` the `T x T` lower-triangular
//! all-ones matrix. The eigenvalues of `U'U` have the closed form
//!
//! ```text
//! 1 / lambda_t = 4 sin^2(omega_t / 2),   omega_t = (2t - 1) pi / (2T + 1),
//! ```
//!
//! for `t = 1..T`, largest first. Shifting the denominator by `2 phi` gives
//! the damped spectrum `1 / lambda_{phi,t} = 2 (1 + phi - cos omega_t)`, which
//! defines the transformed Gram `S^(phi)' S^(phi) = E' V Lambda_phi V' E`.
//!
//! Eigenvectors `V` are not available in closed form; they are computed by a
//! dense symmetric eigendecomposition and paired with the closed-form values
//! by sort order.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::domain;
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Horizon and spectral shift of a (possibly shifted) walk spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumParams {
    pub horizon: usize,
    pub phi: f64,
}

impl SpectrumParams {
    pub fn new(horizon: usize, phi: f64) -> Result<Self> {
        check_horizon(horizon)?;
        check_phi(phi)?;
        Ok(Self { horizon, phi })
    }

    pub fn eigen_sequence(&self) -> EigenSequence {
        build_sequence(self.horizon, self.phi)
    }
}

/// Closed-form eigenvalues indexed `t = 1..T`, strictly decreasing in `t`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenSequence {
    phi: f64,
    values: Vec<f64>,
    frequencies: Vec<f64>,
}

impl EigenSequence {
    /// `values()[t - 1]` is `lambda_t` (or `lambda_{phi,t}`).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `frequencies()[t - 1]` is `omega_t`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `lambda_1`, the largest eigenvalue.
    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidDimension {
            what: "horizon T",
            value: 0,
        });
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi >= 0.0 && phi.is_finite()) {
        return Err(domain("phi", phi, "finite phi >= 0"));
    }
    Ok(())
}

/// `omega_t = (2t - 1) pi / (2T + 1)` for 1-based `t`.
pub fn frequency(t: usize, horizon: usize) -> f64 {
    ((2 * t - 1) as f64 * PI) / ((2 * horizon + 1) as f64)
}

fn build_sequence(horizon: usize, phi: f64) -> EigenSequence {
    let frequencies: Vec<f64> = (1..=horizon).map(|t| frequency(t, horizon)).collect();
    // 2(1 + phi - cos w) = 4 sin^2(w/2) + 2 phi; the sine form avoids
    // cancellation at small w and reproduces the plain spectrum at phi = 0.
    let values = frequencies
        .iter()
        .map(|&w| {
            let half = libm::sin(0.5 * w);
            1.0 / (4.0 * half * half + 2.0 * phi)
        })
        .collect();
    EigenSequence {
        phi,
        values,
        frequencies,
    }
}

/// Closed-form eigenvalues of `U'U`, largest first.
pub fn walk_eigenvalues(horizon: usize) -> Result<EigenSequence> {
    check_horizon(horizon)?;
    Ok(build_sequence(horizon, 0.0))
}

/// Closed-form shifted eigenvalues `lambda_{phi,t}`, largest first.
pub fn shifted_eigenvalues(horizon: usize, phi: f64) -> Result<EigenSequence> {
    SpectrumParams::new(horizon, phi).map(|p| p.eigen_sequence())
}

/// The matrix `U'U`, with entries `T - max(i, j) + 1` (1-based).
pub fn cumsum_gram(horizon: usize) -> Matrix {
    Matrix::from_fn(horizon, horizon, |i, j| (horizon - i.max(j)) as f64)
}

/// Orthonormal eigenvectors of `U'U` paired with the closed-form spectrum.
///
/// Column `t - 1` belongs to `lambda_t`, so columns run from the largest
/// eigenvalue to the smallest.
#[derive(Clone, Debug)]
pub struct WalkBasis {
    vectors: Matrix,
    numeric_values: Vec<f64>,
}

impl WalkBasis {
    pub fn new(horizon: usize) -> Result<Self> {
        check_horizon(horizon)?;
        let eig = linalg::symmetric_eigen(&cumsum_gram(horizon));
        let mut vectors = Matrix::zeros(horizon, horizon);
        let mut numeric_values = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let src = horizon - 1 - t;
            vectors.set_column(t, &eig.vectors.column(src));
            numeric_values.push(eig.values[src]);
        }
        Ok(Self {
            vectors,
            numeric_values,
        })
    }

    pub fn horizon(&self) -> usize {
        self.vectors.nrows()
    }

    /// `V`, columns ordered as the closed-form spectrum.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// Eigenvalues from the dense decomposition, same order as `vectors`.
    pub fn numeric_values(&self) -> &[f64] {
        &self.numeric_values
    }

    /// `V' E`.
    pub fn rotate(&self, e: &Matrix) -> Result<Matrix> {
        if e.nrows() != self.horizon() {
            return Err(Error::DimensionMismatch {
                what: "innovation rows",
                expected: self.horizon(),
                found: e.nrows(),
            });
        }
        Ok(self.vectors.tr_mul(e))
    }

    /// `E' V Lambda_phi V' E` for the given shift.
    pub fn shifted_gram(&self, e: &Matrix, phi: f64) -> Result<Matrix> {
        let spectrum = shifted_eigenvalues(self.horizon(), phi)?;
        self.weighted_gram(e, spectrum.values())
    }

    /// `E' V diag(weights) V' E`.
    pub fn weighted_gram(&self, e: &Matrix, weights: &[f64]) -> Result<Matrix> {
        let mut rotated = self.rotate(e)?;
        for (t, &w) in weights.iter().enumerate() {
            let root = libm::sqrt(w);
            rotated.row_mut(t).scale_mut(root);
        }
        Ok(linalg::gram(&rotated))
    }
}

/// `S^(phi)' S^(phi)` for innovations `E` (`T x k`).
pub fn shifted_gram(e: &Matrix, phi: f64) -> Result<Matrix> {
    check_phi(phi)?;
    WalkBasis::new(e.nrows())?.shifted_gram(e, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn walk_small_horizons() {
        assert_relative_eq!(
            walk_eigenvalues(1).unwrap().values()[0],
            1.0,
            max_relative = 1e-15
        );
        let two = walk_eigenvalues(2).unwrap();
        assert_relative_eq!(
            two.values()[0],
            (3.0 + 5f64.sqrt()) / 2.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            two.values()[1],
            (3.0 - 5f64.sqrt()) / 2.0,
            max_relative = 1e-13
        );
        let three = walk_eigenvalues(3).unwrap();
        // numpy.linalg.eigvalsh of [[3,2,1],[2,2,1],[1,1,1]]
        let expected = [5.048917339522305, 0.6431041321077897, 0.3079785283699036];
        for (a, b) in three.values().iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        assert_relative_eq!(three.sum(), 6.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(matches!(
            walk_eigenvalues(0),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn shifted_examples() {
        assert_relative_eq!(
            shifted_eigenvalues(1, 0.0).unwrap().values()[0],
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            shifted_eigenvalues(1, 1.0).unwrap().values()[0],
            1.0 / 3.0,
            max_relative = 1e-14
        );
        let v = shifted_eigenvalues(2, 0.1).unwrap();
        assert_relative_eq!(v.values()[0], 1.7183134077743258, max_relative = 1e-12);
        assert_relative_eq!(v.values()[1], 0.3548573239329909, max_relative = 1e-12);
        assert!(shifted_eigenvalues(3, -0.1).is_err());
        assert!(shifted_eigenvalues(3, f64::NAN).is_err());
    }

    #[test]
    fn zero_shift_is_bit_identical_to_walk() {
        for t in [1, 7, 64] {
            assert_eq!(
                walk_eigenvalues(t).unwrap(),
                shifted_eigenvalues(t, 0.0).unwrap()
            );
        }
    }

    #[test]
    fn frequencies_follow_formula() {
        let seq = walk_eigenvalues(5).unwrap();
        for (i, &w) in seq.frequencies().iter().enumerate() {
            let t = i + 1;
            assert_eq!(w, ((2 * t - 1) as f64 * PI) / 11.0);
            assert!(w > 0.0 && w < PI);
        }
    }

    #[test]
    fn shifted_gram_of_identity_is_walk_gram() {
        let g = shifted_gram(&Matrix::identity(2, 2), 0.0).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert!((g - expected).norm() < 1e-12);
    }

    #[test]
    fn basis_matches_closed_form() {
        let basis = WalkBasis::new(40).unwrap();
        let closed = walk_eigenvalues(40).unwrap();
        for (a, b) in basis.numeric_values().iter().zip(closed.values()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9);
        }
    }
}
