//! TEON, Muon and AdamW update rules.
//!
//! Matrix updates share one pipeline:
//!
//! 1. momentum: `M ← μM + G` (accumulate, the default) or `M ← μM + (1−μ)G` (ema);
//! 2. direction: `O = Ortho(M)` per slice (Muon) or
//!    `𝒪 = fold(Ortho(ℳᵢ(𝒯)))` on the stacked tensor (TEON);
//! 3. parameters: `W ← (1 − ηλ)W − η·√(m/n)·O`.
//!
//! For TEON the scale `√(m/n)` uses the shape of one stacked slice, not of the
//! `m × nK` unfolding.

mod adamw;
mod groups;
mod optimizer;
mod schedule;

pub use adamw::{adamw_step, AdamState};
pub use groups::{build_groups, GroupKind, ModelLayout, ParamGroup, ParamSpec, Role, StackRole};
pub use optimizer::{GroupState, Optimizer, OptimizerSetup};
pub use schedule::LrSchedule;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeonError};
use crate::linalg::{fold, matricize, Matrix, Mode, Real, Tensor3};
use crate::ortho::{ortho, OrthoScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Teon,
    Muon,
    AdamW,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumStyle {
    /// `M ← μM + G`
    #[default]
    Accumulate,
    /// `M ← μM + (1−μ)G`
    Ema,
}

/// Hyperparameters of one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdatePolicy {
    pub optimizer: OptimizerKind,
    /// Matricization mode; `Some` exactly when `optimizer` is TEON.
    pub mode: Option<Mode>,
    pub eta: f64,
    pub mu: f64,
    pub momentum_style: MomentumStyle,
    pub scheme: OrthoScheme,
    pub weight_decay: f64,
    pub betas: (f64, f64),
    pub eps: f64,
}

impl UpdatePolicy {
    fn base(optimizer: OptimizerKind, mode: Option<Mode>, eta: f64) -> Self {
        Self {
            optimizer,
            mode,
            eta,
            mu: 0.95,
            momentum_style: MomentumStyle::Accumulate,
            scheme: OrthoScheme::ExactSvd,
            weight_decay: 0.0,
            betas: (0.9, 0.95),
            eps: 1e-8,
        }
    }

    pub fn muon(eta: f64) -> Self {
        Self::base(OptimizerKind::Muon, None, eta)
    }

    pub fn teon(mode: Mode, eta: f64) -> Self {
        Self::base(OptimizerKind::Teon, Some(mode), eta)
    }

    pub fn adamw(eta: f64) -> Self {
        Self::base(OptimizerKind::AdamW, None, eta)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_style(mut self, style: MomentumStyle) -> Self {
        self.momentum_style = style;
        self
    }

    pub fn with_scheme(mut self, scheme: OrthoScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.betas = (beta1, beta2);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TeonError::Contract(msg));
        match (self.optimizer, self.mode) {
            (OptimizerKind::Teon, None) => return bad("TEON needs a mode".into()),
            (OptimizerKind::Teon, Some(Mode::Three)) => {
                return bad("TEON updates support modes 1 and 2".into())
            }
            (OptimizerKind::Muon | OptimizerKind::AdamW, Some(_)) => {
                return bad(format!("{:?} does not take a mode", self.optimizer))
            }
            _ => {}
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return bad(format!("mu must lie in [0, 1), got {}", self.mu));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be nonnegative, got {}", self.weight_decay));
        }
        let (b1, b2) = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

fn expect_kind(policy: &UpdatePolicy, kind: OptimizerKind) -> Result<()> {
    if policy.optimizer != kind {
        return Err(TeonError::Contract(format!(
            "policy is for {:?}, expected {kind:?}",
            policy.optimizer
        )));
    }
    Ok(())
}

fn check_gradient<T: Real>(g: &Matrix<T>, step: u64, group: &str) -> Result<()> {
    if g.is_finite() {
        Ok(())
    } else {
        Err(TeonError::NonFiniteGradient {
            step,
            group: group.into(),
        })
    }
}

fn check_same_shape<T: Real>(w: &Matrix<T>, g: &Matrix<T>, what: &str) -> Result<()> {
    if w.shape() != g.shape() {
        return Err(TeonError::dim(format!(
            "{what}: parameter is {:?} but gradient is {:?}",
            w.shape(),
            g.shape()
        )));
    }
    Ok(())
}

fn accumulate<T: Real>(buffer: &mut Matrix<T>, g: &Matrix<T>, mu: f64, style: MomentumStyle) {
    let mu = T::of(mu);
    buffer.scale_in_place(mu);
    let weight = match style {
        MomentumStyle::Accumulate => T::one(),
        MomentumStyle::Ema => T::one() - mu,
    };
    buffer.add_scaled(weight, g);
}

/// `(1 − ηλ)W − η√(m/n)·O` for one `m × n` slice.
fn apply_direction<T: Real>(w: &Matrix<T>, o: &Matrix<T>, policy: &UpdatePolicy, lr: f64) -> Matrix<T> {
    let (m, n) = w.shape();
    let mut next = w.clone();
    if policy.weight_decay > 0.0 {
        next.scale_in_place(T::of(1.0 - lr * policy.weight_decay));
    }
    next.add_scaled(T::of(-lr * (m as f64 / n as f64).sqrt()), o);
    next
}

/// One Muon step on a single matrix. `step` is used only to label errors.
pub fn muon_step<T: Real>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    momentum: &mut Matrix<T>,
    policy: &UpdatePolicy,
    step: u64,
) -> Result<Matrix<T>> {
    expect_kind(policy, OptimizerKind::Muon)?;
    muon_update(w, g, momentum, policy, policy.eta, step, "matrix")
}

pub(crate) fn muon_update<T: Real>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    momentum: &mut Matrix<T>,
    policy: &UpdatePolicy,
    lr: f64,
    step: u64,
    group: &str,
) -> Result<Matrix<T>> {
    check_same_shape(w, g, group)?;
    check_same_shape(w, momentum, group)?;
    check_gradient(g, step, group)?;
    accumulate(momentum, g, policy.mu, policy.momentum_style);
    let o = ortho(momentum, &policy.scheme)?;
    Ok(apply_direction(w, &o, policy, lr))
}

/// One TEON step on `K` stacked same-shape matrices.
pub fn teon_step<T: Real>(
    ws: &Tensor3<T>,
    gs: &Tensor3<T>,
    momentum: &mut Tensor3<T>,
    policy: &UpdatePolicy,
    step: u64,
) -> Result<Tensor3<T>> {
    expect_kind(policy, OptimizerKind::Teon)?;
    teon_update(ws, gs, momentum, policy, policy.eta, step, "tensor")
}

pub(crate) fn teon_update<T: Real>(
    ws: &Tensor3<T>,
    gs: &Tensor3<T>,
    momentum: &mut Tensor3<T>,
    policy: &UpdatePolicy,
    lr: f64,
    step: u64,
    group: &str,
) -> Result<Tensor3<T>> {
    let mode = match policy.mode {
        Some(mode @ (Mode::One | Mode::Two)) => mode,
        other => {
            return Err(TeonError::Contract(format!("TEON step needs mode 1 or 2, got {other:?}")))
        }
    };
    if ws.shape() != gs.shape() || ws.shape() != momentum.shape() {
        return Err(TeonError::dim(format!(
            "{group}: parameters {:?}, gradients {:?}, momentum {:?}",
            ws.shape(),
            gs.shape(),
            momentum.shape()
        )));
    }
    for g in gs.slices() {
        check_gradient(g, step, group)?;
    }
    for (buffer, g) in momentum.slices_mut().iter_mut().zip(gs.slices()) {
        accumulate(buffer, g, policy.mu, policy.momentum_style);
    }
    let o = fold(&ortho(&matricize(momentum, mode), &policy.scheme)?, mode, ws.shape())?;
    let slices = ws
        .slices()
        .iter()
        .zip(o.slices())
        .map(|(w, o)| apply_direction(w, o, policy, lr))
        .collect();
    Tensor3::from_slices(slices)
}
