//! Thin SVD for complex matrices.
//!
//! Tall inputs are first reduced with a Householder QR; the square triangular
//! factor is then diagonalised with one-sided (Hestenes) Jacobi rotations.
//! Jacobi is slower than Golub-Kahan for large matrices but is simple,
//! deterministic, and accurate in the small singular values, which is what
//! rank and condition-number decisions hinge on.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Result of [`svd`]: `A = U · diag(σ) · V^H` with `σ` descending.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors, `rows × k` with `k = min(rows, cols)`.
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `cols × k`.
    pub v: ComplexMatrix,
}

impl SvdResult {
    /// Rebuilds `U · diag(σ) · V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let us = ComplexMatrix::from_fn(self.u.rows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        &us * &self.v.adjoint()
    }
}

/// Thin singular value decomposition.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint())?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }

    let (m, n) = a.shape();
    let qr = HouseholderQr::new(a);
    let (ur, sigma, v) =
        jacobi_square(qr.r.clone()).ok_or(Error::NonConvergence { rows: m, cols: n })?;

    // U = Q · [U_r; 0]
    let mut u = ComplexMatrix::zeros(m, n);
    for i in 0..n {
        for j in 0..n {
            u[(i, j)] = ur[(i, j)];
        }
    }
    qr.apply_q(&mut u);

    Ok(SvdResult {
        u,
        singular_values: sigma,
        v,
    })
}

struct HouseholderQr {
    /// Unit reflector vectors; reflector `k` acts on rows `k..m`.
    reflectors: Vec<Option<Vec<Complex64>>>,
    r: ComplexMatrix,
}

impl HouseholderQr {
    fn new(a: &ComplexMatrix) -> Self {
        let (m, n) = a.shape();
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(n);

        for k in 0..n {
            let norm = (k..m).map(|i| work[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push(None);
                continue;
            }
            let head = work[(k, k)];
            let phase = if head.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                head / head.norm()
            };
            let mut v: Vec<Complex64> = (k..m).map(|i| work[(i, k)]).collect();
            v[0] += phase * norm;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm == 0.0 {
                reflectors.push(None);
                continue;
            }
            for z in &mut v {
                *z /= vnorm;
            }
            for j in k..n {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vi)| vi.conj() * work[(k + t, j)])
                    .sum();
                let f = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    work[(k + t, j)] -= vi * f;
                }
            }
            for i in (k + 1)..m {
                work[(i, k)] = Complex64::new(0.0, 0.0);
            }
            reflectors.push(Some(v));
        }

        let r = ComplexMatrix::from_fn(n, n, |i, j| {
            if j >= i {
                work[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { reflectors, r }
    }

    /// Overwrites `y` with `Q · y`.
    fn apply_q(&self, y: &mut ComplexMatrix) {
        let cols = y.cols();
        for (k, refl) in self.reflectors.iter().enumerate().rev() {
            let Some(v) = refl else { continue };
            for j in 0..cols {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vi)| vi.conj() * y[(k + t, j)])
                    .sum();
                let f = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    y[(k + t, j)] -= vi * f;
                }
            }
        }
    }
}

/// One-sided Jacobi on a square matrix. Returns `(U, σ, V)` sorted by
/// descending σ, or `None` if the sweeps do not settle.
fn jacobi_square(mut g: ComplexMatrix) -> Option<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let n = g.cols();
    let rows = g.rows();
    let mut v = ComplexMatrix::identity(n);
    let tol = f64::EPSILON * n.max(2) as f64;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    let gp = g[(i, p)];
                    let gq = g[(i, q)];
                    alpha += gp.norm_sqr();
                    beta += gq.norm_sqr();
                    gamma += gp.conj() * gq;
                }
                let mag = gamma.norm();
                if mag == 0.0 || mag <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;

                let phase_conj = (gamma / mag).conj();
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                rotate(&mut g, p, q, c, s, phase_conj);
                rotate(&mut v, p, q, c, s, phase_conj);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return None;
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..rows).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let negligible = smax * f64::EPSILON * rows.max(n) as f64;

    let mut u = ComplexMatrix::zeros(rows, n);
    let mut filled = vec![false; n];
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > negligible && s > 0.0 {
            for i in 0..rows {
                u[(i, dst)] = g[(i, src)] / s;
            }
            filled[dst] = true;
        }
    }
    complete_orthonormal(&mut u, &filled);

    let v_sorted = ComplexMatrix::from_fn(n, n, |i, dst| v[(i, order[dst])]);
    Some((u, sigma, v_sorted))
}

fn rotate(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase_conj: Complex64) {
    for i in 0..m.rows() {
        let a = m[(i, p)];
        let b = m[(i, q)] * phase_conj;
        m[(i, p)] = a * c - b * s;
        m[(i, q)] = a * s + b * c;
    }
}

/// Fills the columns not marked `filled` with unit vectors orthogonal to
/// every other column (Gram-Schmidt over the standard basis).
fn complete_orthonormal(u: &mut ComplexMatrix, filled: &[bool]) {
    let rows = u.rows();
    let cols = u.cols();
    let mut done = filled.to_vec();
    let mut candidate = 0usize;
    for j in 0..cols {
        if done[j] {
            continue;
        }
        while candidate < rows {
            let mut w = vec![Complex64::new(0.0, 0.0); rows];
            w[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for k in 0..cols {
                    if !done[k] {
                        continue;
                    }
                    let dot: Complex64 = (0..rows).map(|i| u[(i, k)].conj() * w[i]).sum();
                    for (i, wi) in w.iter_mut().enumerate() {
                        *wi -= u[(i, k)] * dot;
                    }
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for (i, wi) in w.iter().enumerate() {
                    u[(i, j)] = wi / norm;
                }
                done[j] = true;
                break;
            }
        }
    }
}
