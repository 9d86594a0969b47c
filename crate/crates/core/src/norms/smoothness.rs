//! Empirical smoothness ratios `R(X, Y) = ‖∇f(X) − ∇f(Y)‖_* / ‖X − Y‖`.
//!
//! True smoothness constants are suprema of `R`; only sampled maxima are
//! reported here, and every reported maximum is labelled empirical. For the
//! Muon/TEON-i pair the pointwise sandwich `R_teon ≤ R_muon ≤ K·R_teon` is
//! checked on each sample.

use std::fmt;

use rand::Rng as _;

use super::{norm, rank_one_cone, write_records, NormFamily, NormKind, SharedFactor};
use crate::error::{Result, TeonError};
use crate::linalg::{Mode, Tensor3};
use crate::rng::{self, Rng};

/// Relative tolerance of the pointwise sandwich.
const SANDWICH_TOLERANCE: f64 = 1e-9;

/// A function on `m × n × K` tensors with an exact gradient.
pub trait GradientObjective {
    fn shape(&self) -> (usize, usize, usize);
    fn value(&self, x: &Tensor3) -> Result<f64>;
    fn gradient(&self, x: &Tensor3) -> Result<Tensor3>;
}

/// `f(W) = (scale / 2)·‖W‖_F²`. With `scale = 0` the objective is constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledQuadratic {
    pub shape: (usize, usize, usize),
    pub scale: f64,
}

impl ScaledQuadratic {
    pub fn new(shape: (usize, usize, usize), scale: f64) -> Self {
        Self { shape, scale }
    }
}

impl GradientObjective for ScaledQuadratic {
    fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    fn value(&self, x: &Tensor3) -> Result<f64> {
        let f = x.frobenius();
        Ok(0.5 * self.scale * f * f)
    }

    fn gradient(&self, x: &Tensor3) -> Result<Tensor3> {
        Ok(x.scale(self.scale))
    }
}

/// How pairs `(X, Y)` are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSampler {
    /// Independent Gaussian tensors.
    Gaussian,
    /// Gaussian `X`, and `Y = X − D` with `D` a random member of the rank-one
    /// family on which the TEON-`mode` primal norm is `√K` times the Muon norm.
    Aligned(Mode),
}

impl PairSampler {
    fn draw(&self, rng: &mut Rng, (m, n, k): (usize, usize, usize)) -> Result<(Tensor3, Tensor3)> {
        let x: Tensor3 = rng::gaussian_tensor(rng, m, n, k);
        let y = match self {
            PairSampler::Gaussian => rng::gaussian_tensor(rng, m, n, k),
            PairSampler::Aligned(mode) => {
                let shared = match mode {
                    Mode::One => SharedFactor::Left,
                    Mode::Two => SharedFactor::Right,
                    Mode::Three => {
                        return Err(TeonError::Contract("aligned pairs exist for modes 1 and 2 only".into()))
                    }
                };
                let scale = 0.1 + rng.random::<f64>();
                let d: Tensor3 = rank_one_cone(m, n, k, shared, rng.random())?;
                x.sub(&d.scale(scale))
            }
        };
        Ok((x, y))
    }
}

/// Sampled smoothness ratios under two norm families.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    pub family_a: NormFamily,
    pub family_b: NormFamily,
    pub samples: usize,
    pub depth: usize,
    /// Largest sampled `R` under family `a`.
    pub empirical_max_a: f64,
    pub empirical_max_b: f64,
    /// `empirical_max_b / empirical_max_a` (0 when degenerate).
    pub ratio_of_maxima: f64,
    /// Range of the per-sample quotient `R_b / R_a`.
    pub pointwise_min: f64,
    pub pointwise_max: f64,
    /// Largest per-sample `‖X − Y‖_a / ‖X − Y‖_b`.
    pub primal_ratio_max: f64,
    /// Largest per-sample `‖∇f(X) − ∇f(Y)‖_{b,*} / ‖∇f(X) − ∇f(Y)‖_{a,*}`.
    pub dual_ratio_max: f64,
    /// Whether `(a, b)` is a Muon/TEON-i pair with `i ∈ {1, 2}`.
    pub sandwich_checked: bool,
    pub sandwich_violations: usize,
    /// Every gradient difference was zero.
    pub degenerate: bool,
}

impl SmoothnessReport {
    pub fn records(&self) -> Vec<(String, f64)> {
        let a = self.family_a;
        let b = self.family_b;
        vec![
            ("samples".into(), self.samples as f64),
            ("K".into(), self.depth as f64),
            (format!("empirical_max_{a}"), self.empirical_max_a),
            (format!("empirical_max_{b}"), self.empirical_max_b),
            (format!("empirical_ratio_{b}_over_{a}"), self.ratio_of_maxima),
            ("pointwise_min".into(), self.pointwise_min),
            ("pointwise_max".into(), self.pointwise_max),
            ("primal_ratio_max".into(), self.primal_ratio_max),
            ("dual_ratio_max".into(), self.dual_ratio_max),
            ("sandwich_violations".into(), self.sandwich_violations as f64),
            ("degenerate".into(), if self.degenerate { 1.0 } else { 0.0 }),
        ]
    }
}

impl fmt::Display for SmoothnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_records(f, &self.records())
    }
}

/// Draws `samples` pairs and compares `R` under `family_a` and `family_b`.
pub fn estimate_smoothness_ratio(
    f: &dyn GradientObjective,
    samples: usize,
    family_a: NormFamily,
    family_b: NormFamily,
    sampler: PairSampler,
    seed: u64,
) -> Result<SmoothnessReport> {
    if samples == 0 {
        return Err(TeonError::Contract("at least one sample is required".into()));
    }
    let shape = f.shape();
    let depth = shape.2 as f64;
    let sandwich = match (family_a, family_b) {
        (NormFamily::Muon, NormFamily::Teon(m)) | (NormFamily::Teon(m), NormFamily::Muon) => m != Mode::Three,
        _ => false,
    };
    let mut rng = rng::seeded(seed);
    let mut report = SmoothnessReport {
        family_a,
        family_b,
        samples,
        depth: shape.2,
        empirical_max_a: 0.0,
        empirical_max_b: 0.0,
        ratio_of_maxima: 0.0,
        pointwise_min: f64::INFINITY,
        pointwise_max: 0.0,
        primal_ratio_max: 0.0,
        dual_ratio_max: 0.0,
        sandwich_checked: sandwich,
        sandwich_violations: 0,
        degenerate: true,
    };
    for _ in 0..samples {
        let (x, y) = sampler.draw(&mut rng, shape)?;
        let dx = x.sub(&y);
        let dg = f.gradient(&x)?.sub(&f.gradient(&y)?);
        let primal_a = norm(&dx, NormKind::primal(family_a))?;
        let primal_b = norm(&dx, NormKind::primal(family_b))?;
        if primal_a == 0.0 || primal_b == 0.0 {
            continue;
        }
        let dual_a = norm(&dg, NormKind::dual(family_a))?;
        let dual_b = norm(&dg, NormKind::dual(family_b))?;
        let (ra, rb) = (dual_a / primal_a, dual_b / primal_b);
        report.empirical_max_a = report.empirical_max_a.max(ra);
        report.empirical_max_b = report.empirical_max_b.max(rb);
        report.primal_ratio_max = report.primal_ratio_max.max(primal_a / primal_b);
        if dual_a > 0.0 {
            report.degenerate = false;
            report.dual_ratio_max = report.dual_ratio_max.max(dual_b / dual_a);
            let q = rb / ra;
            report.pointwise_min = report.pointwise_min.min(q);
            report.pointwise_max = report.pointwise_max.max(q);
        }
        if sandwich {
            let (r_muon, r_teon) = if family_a == NormFamily::Muon { (ra, rb) } else { (rb, ra) };
            let tol = SANDWICH_TOLERANCE * r_muon.max(r_teon).max(f64::MIN_POSITIVE);
            if r_teon > r_muon + tol || r_muon > depth * r_teon + tol {
                report.sandwich_violations += 1;
            }
        }
    }
    if report.degenerate {
        report.pointwise_min = 0.0;
    } else {
        report.ratio_of_maxima = report.empirical_max_b / report.empirical_max_a;
    }
    Ok(report)
}

/// Every pairwise report over `families`, in order; nothing is merged.
pub fn estimate_smoothness_ratios(
    f: &dyn GradientObjective,
    samples: usize,
    families: &[NormFamily],
    sampler: PairSampler,
    seed: u64,
) -> Result<Vec<SmoothnessReport>> {
    let mut out = Vec::new();
    for (i, &a) in families.iter().enumerate() {
        for &b in &families[i + 1..] {
            out.push(estimate_smoothness_ratio(f, samples, a, b, sampler, seed)?);
        }
    }
    Ok(out)
}
