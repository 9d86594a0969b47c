//! Cross-layer singular-vector alignment and stable rank.
//!
//! Singular vectors are defined up to sign, so alignments are absolute inner
//! products. A record whose smaller top-σ gap is below
//! [`DEGENERATE_GAP`] has basis-ambiguous top vectors; it is flagged rather
//! than trusted.

use crate::error::{Result, TeonError};
use crate::linalg::{svd, Matrix};
use crate::optim::{ModelLayout, Optimizer, Role};

pub const DEGENERATE_GAP: f64 = 1e-8;

/// Default sampling cadence in steps.
pub const DEFAULT_EVERY: u64 = 50;

pub const ALIGNMENT_CSV_HEADER: &str = "step,pair_id,left_align,right_align,sigma_gap";

/// Top singular vector agreement of two same-shape matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    /// `|⟨u₁ᵃ, u₁ᵇ⟩|`
    pub left_align: f64,
    /// `|⟨v₁ᵃ, v₁ᵇ⟩|`
    pub right_align: f64,
    /// `min(σ₁ − σ₂)` over the two matrices.
    pub sigma_gap: f64,
}

impl Alignment {
    pub fn degenerate(&self) -> bool {
        self.sigma_gap < DEGENERATE_GAP
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentRecord {
    pub step: u64,
    pub pair_id: String,
    pub left_align: f64,
    pub right_align: f64,
    pub sigma_gap: f64,
}

impl AlignmentRecord {
    pub fn degenerate(&self) -> bool {
        self.sigma_gap < DEGENERATE_GAP
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{:.16e}",
            self.step, self.pair_id, self.left_align, self.right_align, self.sigma_gap
        )
    }
}

pub fn top_singular_alignment(a: &Matrix, b: &Matrix) -> Result<Alignment> {
    if a.shape() != b.shape() {
        return Err(TeonError::dim(format!(
            "alignment needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (sa, sb) = (svd(a)?, svd(b)?);
    let gap = |s: &[f64]| s[0] - s.get(1).copied().unwrap_or(0.0);
    let left: f64 = sa.u.column(0).iter().zip(sb.u.column(0)).map(|(x, y)| x * y).sum();
    let right: f64 = sa.v.column(0).iter().zip(sb.v.column(0)).map(|(x, y)| x * y).sum();
    Ok(Alignment {
        left_align: left.abs(),
        right_align: right.abs(),
        sigma_gap: gap(&sa.sigma).min(gap(&sb.sigma)),
    })
}

/// `‖m‖_F² / σ₁²`.
pub fn stable_rank(m: &Matrix) -> Result<f64> {
    if m.is_zero() {
        return Err(TeonError::UndefinedInput("stable rank of the zero matrix".into()));
    }
    let s1 = svd(m)?.spectral_norm();
    Ok(m.frobenius_sq() / (s1 * s1))
}

/// Two parameters whose top singular vectors are compared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentPair {
    pub id: String,
    pub a: usize,
    pub b: usize,
}

/// Consecutive-block pairs of every matrix role, then query/key, key/value
/// and query/value pairs inside each block.
pub fn default_pairs(layout: &ModelLayout) -> Vec<AlignmentPair> {
    let find = |role: Role, block: usize| {
        layout
            .params
            .iter()
            .position(|p| p.role == role && p.block == block)
    };
    let mut blocks: Vec<usize> = layout.params.iter().map(|p| p.block).collect();
    blocks.sort_unstable();
    blocks.dedup();
    let mut pairs = Vec::new();
    for role in Role::MATRICES {
        for w in blocks.windows(2) {
            if let (Some(a), Some(b)) = (find(role, w[0]), find(role, w[1])) {
                if layout.params[a].shape == layout.params[b].shape {
                    pairs.push(AlignmentPair {
                        id: format!("{role}{}-{role}{}", w[0], w[1]),
                        a,
                        b,
                    });
                }
            }
        }
    }
    for &block in &blocks {
        for (ra, rb) in [(Role::Query, Role::Key), (Role::Key, Role::Value), (Role::Query, Role::Value)] {
            if let (Some(a), Some(b)) = (find(ra, block), find(rb, block)) {
                if layout.params[a].shape == layout.params[b].shape {
                    pairs.push(AlignmentPair {
                        id: format!("{ra}{block}-{rb}{block}"),
                        a,
                        b,
                    });
                }
            }
        }
    }
    pairs
}

/// Which matrices alignment is measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AlignmentSource {
    /// Optimizer momentum buffers.
    #[default]
    Momentum,
    /// Raw gradients of the step.
    Gradient,
}

/// Alignment records for every pair at each step `t` with `t % every == 0`,
/// given `(t, matrices)` snapshots.
pub fn track_run<I>(snapshots: I, pairs: &[AlignmentPair], every: u64) -> Result<Vec<AlignmentRecord>>
where
    I: IntoIterator<Item = (u64, Vec<Matrix>)>,
{
    let mut tracker = AlignmentTracker::new(pairs.to_vec(), every, AlignmentSource::Momentum)?;
    let mut out = Vec::new();
    for (step, mats) in snapshots {
        out.extend(tracker.record(step, &mats)?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AlignmentTracker {
    pairs: Vec<AlignmentPair>,
    every: u64,
    source: AlignmentSource,
}

impl AlignmentTracker {
    pub fn new(pairs: Vec<AlignmentPair>, every: u64, source: AlignmentSource) -> Result<Self> {
        if every == 0 {
            return Err(TeonError::Contract("alignment cadence must be at least 1".into()));
        }
        Ok(Self { pairs, every, source })
    }

    pub fn source(&self) -> AlignmentSource {
        self.source
    }

    pub fn due(&self, step: u64) -> bool {
        step > 0 && step.is_multiple_of(self.every)
    }

    /// Records for `step` from a full list of per-parameter matrices; empty
    /// when the step is not due.
    pub fn record(&mut self, step: u64, mats: &[Matrix]) -> Result<Vec<AlignmentRecord>> {
        if !self.due(step) {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            let (a, b) = match (mats.get(pair.a), mats.get(pair.b)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(TeonError::dim(format!("pair `{}` refers to a missing matrix", pair.id))),
            };
            let al = top_singular_alignment(a, b)?;
            out.push(AlignmentRecord {
                step,
                pair_id: pair.id.clone(),
                left_align: al.left_align,
                right_align: al.right_align,
                sigma_gap: al.sigma_gap,
            });
        }
        Ok(out)
    }

    /// Records after optimizer step `step`, reading momentum buffers or the
    /// given gradients according to the configured source.
    pub fn observe(&mut self, step: u64, optimizer: &Optimizer, grads: &[Matrix]) -> Result<Vec<AlignmentRecord>> {
        if !self.due(step) {
            return Ok(Vec::new());
        }
        match self.source {
            AlignmentSource::Gradient => self.record(step, grads),
            AlignmentSource::Momentum => {
                let mats: Vec<Matrix> = (0..grads.len())
                    .map(|i| optimizer.momentum_of(i).unwrap_or_else(|| grads[i].clone()))
                    .collect();
                self.record(step, &mats)
            }
        }
    }
}
