use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L · L^H`.
///
/// Only the lower triangle of `a` is read. Fails when a pivot is not
/// positive relative to its diagonal entry.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if !a.is_square() {
        return Err(Error::shape(
            "cholesky",
            format!("{}x{} is not square", a.rows(), a.cols()),
        ));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let ajj = a[(j, j)].re;
        let d = ajj - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if !(d > f64::EPSILON * n as f64 * ajj.abs()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let s: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (a[(i, j)] - s) / ljj;
        }
    }
    Ok(l)
}

/// Solves `A · X = B` for Hermitian positive definite `A`.
pub fn hermitian_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if b.rows() != a.rows() {
        return Err(Error::shape(
            "hermitian_solve",
            format!("A is {}x{}, B has {} rows", a.rows(), a.cols(), b.rows()),
        ));
    }
    let l = cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        // L y = b
        for i in 0..n {
            let s: Complex64 = (0..i).map(|k| l[(i, k)] * x[(k, col)]).sum();
            x[(i, col)] = (x[(i, col)] - s) / l[(i, i)];
        }
        // L^H x = y
        for i in (0..n).rev() {
            let s: Complex64 = ((i + 1)..n).map(|k| l[(k, i)].conj() * x[(k, col)]).sum();
            x[(i, col)] = (x[(i, col)] - s) / l[(i, i)];
        }
    }
    Ok(x)
}
