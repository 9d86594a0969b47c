//! AdamW for parameters that are not orthogonalized.
//!
//! With `t` counting from 1:
//!
//! ```text
//! m ← β₁m + (1−β₁)g        v ← β₂v + (1−β₂)g²
//! m̂ = m / (1−β₁ᵗ)          v̂ = v / (1−β₂ᵗ)
//! w ← (1−ηλ)w − η·m̂ / (√v̂ + ε)
//! ```

use super::{check_gradient, check_same_shape, expect_kind, OptimizerKind, UpdatePolicy};
use crate::error::Result;
use crate::linalg::{Matrix, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f64> {
    pub first: Matrix<T>,
    pub second: Matrix<T>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            first: Matrix::zeros(rows, cols),
            second: Matrix::zeros(rows, cols),
            t: 0,
        }
    }
}

pub fn adamw_step<T: Real>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut AdamState<T>,
    policy: &UpdatePolicy,
    step: u64,
) -> Result<Matrix<T>> {
    expect_kind(policy, OptimizerKind::AdamW)?;
    adamw_update(w, g, state, policy, policy.eta, step, "vector")
}

pub(crate) fn adamw_update<T: Real>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut AdamState<T>,
    policy: &UpdatePolicy,
    lr: f64,
    step: u64,
    group: &str,
) -> Result<Matrix<T>> {
    check_same_shape(w, g, group)?;
    check_same_shape(w, &state.first, group)?;
    check_gradient(g, step, group)?;
    let (b1, b2) = policy.betas;
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    state.first = state.first.zip_map(g, |m, g| T::of(b1) * m + T::of(1.0 - b1) * g);
    state.second = state.second.zip_map(g, |v, g| T::of(b2) * v + T::of(1.0 - b2) * g * g);
    let c1 = T::of(1.0 - b1.powi(t));
    let c2 = T::of(1.0 - b2.powi(t));
    let (lr_t, eps) = (T::of(lr), T::of(policy.eps));
    let decay = T::of(1.0 - lr * policy.weight_decay);
    let direction = state
        .first
        .zip_map(&state.second, |m, v| (m / c1) / ((v / c2).sqrt() + eps));
    Ok(w.zip_map(&direction, |w, d| decay * w - lr_t * d))
}
