//! Small dense symmetric linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::ContractViolation(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = 1.0 + m.amax();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::ContractViolation(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues in ascending order with matching unit eigenvectors as columns.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Leftmost eigenvalue and a unit eigenvector of a symmetric matrix.
pub fn min_eigenvalue(h: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    check_symmetric(h)?;
    if h.nrows() == 0 {
        return Err(Error::ContractViolation("empty matrix".into()));
    }
    let (vals, vecs) = sym_eigen_sorted(h);
    let mut v = vecs.column(0).into_owned();
    let nv = v.norm();
    if nv > 0.0 {
        v /= nv;
    }
    Ok((vals[0], v))
}

/// Smallest eigenvalue without the symmetry check (input is symmetrized).
pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen_sorted(m).0[0]
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = sym_eigen_sorted(m);
    vals[0].abs().max(vals[vals.len() - 1].abs())
}

/// Solves `(A + ridge·I) x = b` for symmetric `A`, increasing the ridge from
/// `initial_ridge` until a Cholesky factorization succeeds. Returns the
/// solution and the ridge used.
pub fn solve_spd_with_ridge(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    initial_ridge: f64,
) -> Option<(DVector<f64>, f64)> {
    let n = a.nrows();
    let scale = 1.0 + a.amax();
    if let Some(ch) = a.clone().cholesky() {
        return Some((ch.solve(b), 0.0));
    }
    let mut ridge = initial_ridge.max(f64::EPSILON) * scale;
    for _ in 0..40 {
        let shifted = a + DMatrix::identity(n, n) * ridge;
        if let Some(ch) = shifted.cholesky() {
            return Some((ch.solve(b), ridge));
        }
        ridge *= 10.0;
    }
    None
}
