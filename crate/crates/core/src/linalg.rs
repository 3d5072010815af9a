//! Thin helpers over `nalgebra` dense matrices.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigenpairs of a symmetric matrix with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix,
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Full eigendecomposition of a symmetric matrix, ascending eigenvalues.
pub fn symmetric_eigen(a: &Matrix) -> SymmetricEigen {
    let eig = a.clone().symmetric_eigen();
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = sorted_order(&raw);
    let n = a.nrows();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SymmetricEigen {
        values: order.iter().map(|&i| raw[i]).collect(),
        vectors,
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 1 {
        return alloc::vec![a[(0, 0)]];
    }
    let mut v: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(a: &Matrix) -> (f64, f64) {
    let v = symmetric_eigenvalues(a);
    (v[0], v[v.len() - 1])
}

/// Column-wise running sums: row `t` of the result is `sum_{r <= t} e_r`.
///
/// Equals `U * e` with `U` lower-triangular all-ones, summed in row order.
pub fn cumulative_sums(e: &Matrix) -> Matrix {
    let mut s = e.clone();
    for j in 0..s.ncols() {
        let mut acc = 0.0;
        for t in 0..s.nrows() {
            acc += e[(t, j)];
            s[(t, j)] = acc;
        }
    }
    s
}

/// `a' a`, symmetrized.
pub fn gram(a: &Matrix) -> Matrix {
    let mut g = a.tr_mul(a);
    symmetrize(&mut g);
    g
}

pub fn symmetrize(a: &mut Matrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// Rows and columns of `g` indexed by `idx`.
pub fn principal_submatrix(g: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])])
}

pub fn ensure_finite(a: &[f64], what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}
