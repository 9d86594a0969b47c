//! Deterministic training loop and CSV persistence.
//!
//! `metrics.csv` starts with a version comment, then one row per logged step
//! and `# key=value` summary lines. `alignment.csv` holds one row per tracked
//! pair and sampled step. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::config::RunConfig;
use super::gradcheck::{check_directions, TOLERANCE};
use super::tasks::Task;
use crate::diagnostics::{default_pairs, AlignmentRecord, AlignmentTracker, ALIGNMENT_CSV_HEADER};
use crate::error::{Result, TeonError};
use crate::linalg::{Matrix, Tensor3};
use crate::norms::{norm, NormKind};
use crate::optim::{build_groups, GroupKind, ModelLayout, Optimizer, ParamGroup};

pub const METRICS_VERSION: &str = "# teon-metrics v1";
pub const METRICS_HEADER: &str = "step,loss,grad_muon_norm,grad_teon1_dual,grad_muon_dual,lr,wall_ms";

/// Relative tolerance of the per-record dual-norm sandwich.
const SANDWICH_TOLERANCE: f64 = 1e-9;

/// Random directions in the gradient gate run before training.
const GATE_DIRECTIONS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub step: usize,
    pub loss: f64,
    pub grad_muon_norm: f64,
    pub grad_teon1_dual: f64,
    pub grad_muon_dual: f64,
    pub lr: f64,
    pub wall_ms: f64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.step, self.loss, self.grad_muon_norm, self.grad_teon1_dual, self.grad_muon_dual, self.lr, self.wall_ms
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub final_loss: f64,
    pub best_loss: f64,
    pub best_loss_step: usize,
    pub best_teon1_dual: f64,
    pub best_muon_dual: f64,
    /// Step of the smallest TEON-1 dual gradient norm among logged records.
    pub best_dual_step: usize,
}

impl RunSummary {
    pub fn records(&self) -> Vec<(&'static str, String)> {
        vec![
            ("final_loss", format!("{:.16e}", self.final_loss)),
            ("best_loss", format!("{:.16e}", self.best_loss)),
            ("best_loss_step", self.best_loss_step.to_string()),
            ("best_teon1_dual", format!("{:.16e}", self.best_teon1_dual)),
            ("best_muon_dual", format!("{:.16e}", self.best_muon_dual)),
            ("best_dual_step", self.best_dual_step.to_string()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    /// Loss before every step and after the last one (`steps + 1` values).
    pub losses: Vec<f64>,
    pub metrics: Vec<MetricsRecord>,
    pub alignment: Vec<AlignmentRecord>,
    pub summary: RunSummary,
    pub params: Vec<Matrix>,
}

impl RunOutcome {
    /// First step whose loss is at most `threshold`.
    pub fn steps_to_reach(&self, threshold: f64) -> Option<usize> {
        self.losses.iter().position(|&l| l <= threshold)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = format!("{METRICS_VERSION}\n{METRICS_HEADER}\n");
        for r in &self.metrics {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        for (key, value) in self.summary.records() {
            let _ = writeln!(out, "# {key}={value}");
        }
        out
    }

    pub fn alignment_csv(&self) -> String {
        let mut out = format!("{ALIGNMENT_CSV_HEADER}\n");
        for r in &self.alignment {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Gradient norms over the stacking groups: Muon primal and dual over every
/// matrix, and the sum of TEON-1 duals of the groups (a single matrix counts
/// as a depth-1 group).
pub struct GradientNorms {
    groups: Vec<ParamGroup>,
    max_depth: usize,
}

impl GradientNorms {
    pub fn new(layout: &ModelLayout, config: &RunConfig) -> Result<Self> {
        let groups: Vec<ParamGroup> = build_groups(layout, config.group_size(), &config.stack_set())?
            .into_iter()
            .filter(|g| g.kind != GroupKind::VectorAdamW)
            .collect();
        let max_depth = groups.iter().map(ParamGroup::depth).max().unwrap_or(1);
        Ok(Self { groups, max_depth })
    }

    /// `(muon, teon1_dual, muon_dual)`.
    pub fn evaluate(&self, grads: &[Matrix]) -> Result<(f64, f64, f64)> {
        let (mut muon, mut teon_dual, mut muon_dual) = (0.0f64, 0.0, 0.0);
        for g in &self.groups {
            let t = Tensor3::from_slices(g.members.iter().map(|&i| grads[i].clone()).collect())?;
            muon = muon.max(norm(&t, NormKind::MUON)?);
            teon_dual += norm(&t, NormKind::teon_dual(crate::Mode::One))?;
            muon_dual += norm(&t, NormKind::MUON_DUAL)?;
        }
        Ok((muon, teon_dual, muon_dual))
    }

    /// `teon1_dual ≤ muon_dual ≤ √K·teon1_dual` with `K` the deepest group.
    pub fn sandwich_holds(&self, teon_dual: f64, muon_dual: f64) -> bool {
        let tol = SANDWICH_TOLERANCE * muon_dual.max(teon_dual);
        teon_dual <= muon_dual + tol && muon_dual <= (self.max_depth as f64).sqrt() * teon_dual + tol
    }
}

/// Runs the configured task without touching the filesystem.
pub fn train(config: &RunConfig) -> Result<RunOutcome> {
    let task = config.build_task()?;
    train_task(task.as_ref(), config)
}

pub fn train_task(task: &dyn Task, config: &RunConfig) -> Result<RunOutcome> {
    config.validate().map_err(TeonError::Contract)?;
    let layout = task.layout();
    let start = task.init();
    check_directions(task, &start, GATE_DIRECTIONS, config.seed, TOLERANCE)?;

    let mut optimizer = Optimizer::new(layout, &config.optimizer_setup()?)?;
    let norms = GradientNorms::new(layout, config)?;
    let mut tracker = match config.alignment.every {
        0 => None,
        every => Some(AlignmentTracker::new(default_pairs(layout), every, config.alignment_source())?),
    };
    let schedule = config.schedule();
    let eta = config.optimizer.eta;
    let clock = Instant::now();

    let mut params = start;
    let mut losses = Vec::with_capacity(config.steps + 1);
    let mut metrics = Vec::new();
    let mut alignment = Vec::new();
    for t in 0..=config.steps {
        let (loss, grads) = task.loss_and_grad(&params)?;
        if !loss.is_finite() {
            return Err(TeonError::NonFiniteLoss { step: t });
        }
        losses.push(loss);
        let factor = schedule.factor(t, config.steps);
        if t % config.log_every == 0 || t == config.steps {
            let (muon, teon_dual, muon_dual) = norms.evaluate(&grads)?;
            if !norms.sandwich_holds(teon_dual, muon_dual) {
                return Err(TeonError::Contract(format!(
                    "dual-norm sandwich violated at step {t}: teon1_dual={teon_dual}, muon_dual={muon_dual}"
                )));
            }
            let wall_ms = if config.record_wall_time {
                clock.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            metrics.push(MetricsRecord {
                step: t,
                loss,
                grad_muon_norm: muon,
                grad_teon1_dual: teon_dual,
                grad_muon_dual: muon_dual,
                lr: factor * eta,
                wall_ms,
            });
        }
        if t == config.steps {
            break;
        }
        optimizer.step(&mut params, &grads, factor)?;
        if let Some(tracker) = tracker.as_mut() {
            alignment.extend(tracker.observe(t as u64 + 1, &optimizer, &grads)?);
        }
    }

    let (best_loss_step, best_loss) = losses
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, l)| if l < acc.1 { (i, l) } else { acc });
    let best_dual = metrics
        .iter()
        .min_by(|a, b| a.grad_teon1_dual.total_cmp(&b.grad_teon1_dual))
        .expect("the final step is always logged");
    let summary = RunSummary {
        final_loss: *losses.last().expect("at least one loss"),
        best_loss,
        best_loss_step,
        best_teon1_dual: best_dual.grad_teon1_dual,
        best_muon_dual: metrics.iter().map(|m| m.grad_muon_dual).fold(f64::INFINITY, f64::min),
        best_dual_step: best_dual.step,
    };
    Ok(RunOutcome {
        losses,
        metrics,
        alignment,
        summary,
        params,
    })
}

/// Trains and writes `metrics.csv` and `alignment.csv` into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = train(config)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("metrics.csv"), outcome.metrics_csv())?;
    fs::write(out_dir.join("alignment.csv"), outcome.alignment_csv())?;
    Ok(outcome)
}
