//! Complex linear algebra used throughout the pipeline.
//!
//! All tolerances are relative to the largest singular value so scaled
//! channels (large-scale gain applied or not) behave identically.

mod matrix;
mod solve;
mod svd;

pub use matrix::ComplexMatrix;
pub use num_complex::Complex64;
pub use solve::{cholesky, hermitian_solve};
pub use svd::{svd, SvdResult};

use crate::error::Result;

/// Singular values at or below `RANK_TOLERANCE · σ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `σ_max / σ_min`, or `+∞` when `σ_min` is numerically zero (including the
/// zero matrix).
pub fn condition_number(a: &ComplexMatrix) -> Result<f64> {
    let s = svd(a)?.singular_values;
    Ok(condition_from_singular_values(&s))
}

pub fn condition_from_singular_values(s: &[f64]) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= RANK_TOLERANCE * smax {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Number of singular values above `RANK_TOLERANCE · σ_max`.
pub fn rank(a: &ComplexMatrix) -> Result<usize> {
    let s = svd(a)?.singular_values;
    Ok(rank_from_singular_values(&s))
}

pub fn rank_from_singular_values(s: &[f64]) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > RANK_TOLERANCE * smax).count()
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.as_slice()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}
