//! Muon and TEON norms on stacked `m × n × K` tensors, and the machinery
//! built on them.
//!
//! - Muon: `max_k ‖X⁽ᵏ⁾‖_op`, dual `Σ_k ‖X⁽ᵏ⁾‖_*`.
//! - TEON-i: `‖ℳᵢ(X)‖_op`, dual `‖ℳᵢ(X)‖_*`.
//!
//! For `i ∈ {1, 2}` these satisfy `muon ≤ teon-i ≤ √K·muon` and
//! `teon-i,* ≤ muon,* ≤ √K·teon-i,*`.

mod bounds;
mod construct;
mod ntr;
pub mod sampling;
mod smoothness;

use std::fmt;

pub use bounds::{convergence_bound_pair, eval_ntr_bound, optimal_eta, simplified_bound, BoundInputs};
pub use construct::{build_max_gain_tensor, orthonormal_columns, rank_one_cone, SharedFactor};
pub use ntr::{ntr_step, ntr_step_muon, ntr_step_teon};
pub use smoothness::{
    estimate_smoothness_ratio, estimate_smoothness_ratios, GradientObjective, PairSampler,
    ScaledQuadratic, SmoothnessReport,
};

use crate::error::Result;
use crate::linalg::{matricize, svd, Matrix, Mode, Real, Tensor3};

/// Norm family: layer-wise Muon or mode-`i` TEON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormFamily {
    Muon,
    Teon(Mode),
}

impl fmt::Display for NormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormFamily::Muon => write!(f, "muon"),
            NormFamily::Teon(mode) => write!(f, "teon{mode}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NormKind {
    pub family: NormFamily,
    pub dual: bool,
}

impl NormKind {
    pub const MUON: NormKind = NormKind::primal(NormFamily::Muon);
    pub const MUON_DUAL: NormKind = NormKind::dual(NormFamily::Muon);

    pub const fn primal(family: NormFamily) -> Self {
        Self { family, dual: false }
    }

    pub const fn dual(family: NormFamily) -> Self {
        Self { family, dual: true }
    }

    pub const fn teon(mode: Mode) -> Self {
        Self::primal(NormFamily::Teon(mode))
    }

    pub const fn teon_dual(mode: Mode) -> Self {
        Self::dual(NormFamily::Teon(mode))
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dual {
            write!(f, "{}_dual", self.family)
        } else {
            write!(f, "{}", self.family)
        }
    }
}

fn spectral<T: Real>(m: &Matrix<T>) -> Result<T> {
    if m.is_zero() {
        return Ok(T::zero());
    }
    Ok(svd(m)?.spectral_norm())
}

fn nuclear<T: Real>(m: &Matrix<T>) -> Result<T> {
    if m.is_zero() {
        return Ok(T::zero());
    }
    Ok(svd(m)?.nuclear_norm())
}

pub fn norm<T: Real>(t: &Tensor3<T>, kind: NormKind) -> Result<T> {
    match (kind.family, kind.dual) {
        (NormFamily::Muon, false) => t
            .slices()
            .iter()
            .try_fold(T::zero(), |acc, s| Ok(acc.max(spectral(s)?))),
        (NormFamily::Muon, true) => t
            .slices()
            .iter()
            .try_fold(T::zero(), |acc, s| Ok(acc + nuclear(s)?)),
        (NormFamily::Teon(mode), false) => spectral(&matricize(t, mode)),
        (NormFamily::Teon(mode), true) => nuclear(&matricize(t, mode)),
    }
}

/// Slack of every comparability inequality for one tensor; negative slack
/// beyond `-1e-9·scale` is a violation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparabilityReport {
    pub mode: Mode,
    pub depth: usize,
    pub muon: f64,
    pub teon: f64,
    pub muon_dual: f64,
    pub teon_dual: f64,
    /// `teon − muon`
    pub primal_lower_slack: f64,
    /// `√K·muon − teon`
    pub primal_upper_slack: f64,
    /// `muon_dual − teon_dual`
    pub dual_lower_slack: f64,
    /// `√K·teon_dual − muon_dual`
    pub dual_upper_slack: f64,
    pub scale: f64,
    pub violated: bool,
}

pub const COMPARABILITY_TOLERANCE: f64 = 1e-9;

impl ComparabilityReport {
    pub fn slacks(&self) -> [f64; 4] {
        [
            self.primal_lower_slack,
            self.primal_upper_slack,
            self.dual_lower_slack,
            self.dual_upper_slack,
        ]
    }

    pub fn records(&self) -> Vec<(String, f64)> {
        vec![
            ("mode".into(), self.mode.index() as f64),
            ("K".into(), self.depth as f64),
            ("muon".into(), self.muon),
            (format!("teon{}", self.mode), self.teon),
            ("muon_dual".into(), self.muon_dual),
            (format!("teon{}_dual", self.mode), self.teon_dual),
            ("primal_lower_slack".into(), self.primal_lower_slack),
            ("primal_upper_slack".into(), self.primal_upper_slack),
            ("dual_lower_slack".into(), self.dual_lower_slack),
            ("dual_upper_slack".into(), self.dual_upper_slack),
            ("violated".into(), if self.violated { 1.0 } else { 0.0 }),
        ]
    }
}

impl fmt::Display for ComparabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_records(f, &self.records())
    }
}

pub(crate) fn write_records(f: &mut fmt::Formatter<'_>, records: &[(String, f64)]) -> fmt::Result {
    for (key, value) in records {
        writeln!(f, "{key}={value:.17e}")?;
    }
    Ok(())
}

/// Evaluates `muon ≤ teon-i ≤ √K·muon` and `teon-i,* ≤ muon,* ≤ √K·teon-i,*`.
pub fn check_comparability<T: Real>(t: &Tensor3<T>, mode: Mode) -> Result<ComparabilityReport> {
    if mode == Mode::Three {
        return Err(crate::TeonError::Contract(
            "comparability holds for modes 1 and 2 only".into(),
        ));
    }
    let root_k = (t.depth() as f64).sqrt();
    let muon = norm(t, NormKind::MUON)?.as_f64();
    let teon = norm(t, NormKind::teon(mode))?.as_f64();
    let muon_dual = norm(t, NormKind::MUON_DUAL)?.as_f64();
    let teon_dual = norm(t, NormKind::teon_dual(mode))?.as_f64();
    let scale = [muon, teon, muon_dual, teon_dual]
        .into_iter()
        .fold(0.0, f64::max);
    let mut report = ComparabilityReport {
        mode,
        depth: t.depth(),
        muon,
        teon,
        muon_dual,
        teon_dual,
        primal_lower_slack: teon - muon,
        primal_upper_slack: root_k * muon - teon,
        dual_lower_slack: muon_dual - teon_dual,
        dual_upper_slack: root_k * teon_dual - muon_dual,
        scale,
        violated: false,
    };
    report.violated = report
        .slacks()
        .iter()
        .any(|&s| s < -COMPARABILITY_TOLERANCE * scale);
    Ok(report)
}
