//! Small dense linear-algebra helpers and the tolerance conventions shared by
//! the order engine.

use nalgebra::{DMatrix, DVector};

use crate::error::{LseError, Result};

/// Relative tolerance for equalities between parameter vectors and matrices.
pub const EQ_TOL: f64 = 1e-9;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `||a - b||_inf <= EQ_TOL * max(||a||_inf, ||b||_inf)`.
pub fn vec_approx_eq(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let scale = max_abs_vec(a).max(max_abs_vec(b));
    max_abs_vec(&(a - b)) <= EQ_TOL * scale
}

pub fn mat_approx_eq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let scale = max_abs(a).max(max_abs(b));
    max_abs(&(a - b)) <= EQ_TOL * scale
}

pub fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(LseError::InvalidMatrix(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = max_abs(a).max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return Err(LseError::InvalidMatrix(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Correlation matrix `D^{-1/2} A D^{-1/2}` of a positive-diagonal matrix.
pub fn correlation(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].sqrt()).collect();
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / (d[i] * d[j]))
}

/// `a' M a`.
pub fn quad_form(m: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    (a.transpose() * m * a)[(0, 0)]
}
