//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of a tall working copy are rotated pairwise in cyclic order until
//! every pair is orthogonal to within `max(T::JACOBI_TOL, rows·ε)` measured as
//! `|⟨a_p, a_q⟩| / (‖a_p‖‖a_q‖)`. The accumulated rotations form `V`; the
//! column norms are the singular values. Wide inputs are handled through the
//! transpose. The sweep order is fixed, so results are deterministic.

use super::matrix::{dot, Matrix};
use super::Real;
use crate::error::{Result, TeonError};

pub const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(σ) Vᵀ` with `r = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct SvdResult<T = f64> {
    /// `rows × r`, orthonormal columns.
    pub u: Matrix<T>,
    /// Non-increasing, length `r`.
    pub sigma: Vec<T>,
    /// `cols × r`, orthonormal columns.
    pub v: Matrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let us = Matrix::from_fn(self.u.rows(), self.u.cols(), |i, j| self.u.get(i, j) * self.sigma[j]);
        us.matmul_t(&self.v)
    }

    /// `U Vᵀ`.
    pub fn polar(&self) -> Matrix<T> {
        self.u.matmul_t(&self.v)
    }

    pub fn spectral_norm(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    pub fn nuclear_norm(&self) -> T {
        self.sigma.iter().copied().sum()
    }
}

pub fn svd<T: Real>(a: &Matrix<T>) -> Result<SvdResult<T>> {
    if !a.is_finite() {
        return Err(TeonError::NonFinite {
            context: "SVD input".into(),
        });
    }
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let SvdResult { u, sigma, v } = jacobi_tall(&a.transpose())?;
        Ok(SvdResult { u: v, sigma, v: u })
    }
}

fn jacobi_tall<T: Real>(a: &Matrix<T>) -> Result<SvdResult<T>> {
    let (m, n) = a.shape();
    let tol = T::of(T::JACOBI_TOL.max(m as f64 * T::epsilon().as_f64()));

    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();

    let mut converged = n < 2;
    let mut residual = T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        residual = T::zero();
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha <= T::min_positive_value() || beta <= T::min_positive_value() {
                    continue;
                }
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                let (c, s) = rotation(alpha, beta, gamma);
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        converged = residual <= tol;
    }
    if !converged {
        return Err(TeonError::SvdNoConvergence {
            sweeps: MAX_SWEEPS,
            residual: residual.as_f64(),
        });
    }

    let norms: Vec<T> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let mut ucols: Vec<Vec<T>> = Vec::with_capacity(n);
    for &j in &order {
        if norms[j] > T::zero() {
            ucols.push(cols[j].iter().map(|&x| x / norms[j]).collect());
        } else {
            let completed = orthonormal_complement(&ucols, m);
            ucols.push(completed);
        }
    }
    let vsorted: Vec<Vec<T>> = order.iter().map(|&j| vcols[j].clone()).collect();

    Ok(SvdResult {
        u: Matrix::from_columns(&ucols),
        sigma,
        v: Matrix::from_columns(&vsorted),
    })
}

/// Rotation `(c, s)` that zeroes the off-diagonal entry of the 2×2 Gram
/// block `[[alpha, gamma], [gamma, beta]]`.
fn rotation<T: Real>(alpha: T, beta: T, gamma: T) -> (T, T) {
    let two = T::of(2.0);
    let zeta = (beta - alpha) / (two * gamma);
    let t = if zeta.abs() > T::of(1e150) {
        T::one() / (two * zeta)
    } else {
        zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    (c, c * t)
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Unit vector orthogonal to every column in `basis`, built by two passes of
/// Gram–Schmidt on the standard basis vector with the largest residual.
fn orthonormal_complement<T: Real>(basis: &[Vec<T>], len: usize) -> Vec<T> {
    let mut best: Option<(T, Vec<T>)> = None;
    for e in 0..len {
        let mut v: Vec<T> = (0..len).map(|i| if i == e { T::one() } else { T::zero() }).collect();
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&v, b);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, v));
        }
    }
    let (norm, v) = best.expect("len > 0");
    v.into_iter().map(|x| x / norm).collect()
}
