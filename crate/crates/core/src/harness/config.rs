//! Run configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! steps = 200
//! log_every = 1
//! out_dir = "runs/aligned"
//!
//! [task]
//! kind = "aligned_quadratic"   # quadratic | aligned_quadratic | deep_linear | micro_attention
//! m = 16
//! n = 16
//! k = 4
//!
//! [optimizer]
//! optimizer = "teon"           # teon | muon | adamw
//! mode = 1
//! eta = 0.25
//! mu = 0.0
//!
//! [grouping]
//! k = 4
//! stack_set = ["dense"]
//!
//! [schedule]
//! kind = "constant"
//! ```
//!
//! Unknown keys, and task keys that do not apply to the chosen task, are
//! rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tasks::{DeepLinear, MicroAttention, StackedQuadratic, Task};
use crate::diagnostics::{AlignmentSource, DEFAULT_EVERY};
use crate::error::{Result, TeonError};
use crate::linalg::Mode;
use crate::optim::{LrSchedule, MomentumStyle, OptimizerKind, OptimizerSetup, StackRole, UpdatePolicy};
use crate::ortho::{NsSchedule, OrthoScheme};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub log_every: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Fill the `wall_ms` column with elapsed time. Off by default, which
    /// writes 0 and keeps repeated runs byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
    pub task: TaskConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub grouping: GroupingConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub alignment: AlignmentConfig,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Quadratic,
    AlignedQuadratic,
    DeepLinear,
    MicroAttention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Target scale of the aligned quadratic.
    pub scale: Option<f64>,
    pub depth: Option<usize>,
    pub width: Option<usize>,
    pub batch: Option<usize>,
    pub dim: Option<usize>,
    pub hidden: Option<usize>,
    pub seq: Option<usize>,
    pub blocks: Option<usize>,
    /// Data seed; the run seed is used when absent.
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Exact,
    NewtonSchulz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub optimizer: OptimizerKind,
    pub mode: Option<Mode>,
    pub eta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub momentum_style: MomentumStyle,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default = "default_preset")]
    pub ns_preset: String,
    #[serde(default = "default_ns_steps")]
    pub ns_steps: usize,
    /// Overrides `$TEON_PRESET_DIR`.
    pub preset_dir: Option<PathBuf>,
    #[serde(default)]
    pub weight_decay: f64,
    /// Learning rate of AdamW-managed vectors; `eta` when absent.
    pub adam_eta: Option<f64>,
    #[serde(default = "default_betas")]
    pub adam_betas: (f64, f64),
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_mu() -> f64 {
    0.95
}

fn default_preset() -> String {
    "jordan".into()
}

fn default_ns_steps() -> usize {
    5
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.95)
}

fn default_eps() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingConfig {
    /// Group size `K`; defaults to the task's natural depth.
    pub k: Option<usize>,
    /// Roles stacked by TEON; defaults to every role.
    pub stack_set: Option<BTreeSet<StackRole>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Cosine,
    LinearWarmup,
    ConstantThenLinear,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub warmup_ratio: f64,
    /// Flat fraction of `constant_then_linear`.
    #[serde(default = "default_hold")]
    pub hold_ratio: f64,
}

fn default_hold() -> f64 {
    0.4
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentSourceConfig {
    #[default]
    Momentum,
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentConfig {
    /// Cadence in steps; 0 disables tracking.
    #[serde(default = "default_every")]
    pub every: u64,
    #[serde(default)]
    pub source: AlignmentSourceConfig,
}

fn default_every() -> u64 {
    DEFAULT_EVERY
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            every: DEFAULT_EVERY,
            source: AlignmentSourceConfig::Momentum,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses and validates; `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| TeonError::Config {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        config.validate().map_err(|message| TeonError::Config {
            path: origin.to_path_buf(),
            message,
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.steps == 0 {
            return Err("field `steps`: must be at least 1".into());
        }
        if self.log_every == 0 {
            return Err("field `log_every`: must be at least 1".into());
        }
        self.task.validate()?;
        self.schedule().validate().map_err(|e| format!("[schedule]: {e}"))?;
        if let Some(0) = self.grouping.k {
            return Err("[grouping] field `k`: must be at least 1".into());
        }
        let (matrix, vector) = self.policies().map_err(|e| format!("[optimizer]: {e}"))?;
        matrix.validate().map_err(|e| format!("[optimizer]: {e}"))?;
        vector.validate().map_err(|e| format!("[optimizer]: {e}"))?;
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        let s = &self.schedule;
        match s.kind {
            ScheduleKind::Constant => LrSchedule::Constant,
            ScheduleKind::Cosine => LrSchedule::Cosine { warmup_ratio: s.warmup_ratio },
            ScheduleKind::LinearWarmup => LrSchedule::LinearWarmup { warmup_ratio: s.warmup_ratio },
            ScheduleKind::ConstantThenLinear => LrSchedule::ConstantThenLinear { hold_ratio: s.hold_ratio },
        }
    }

    pub fn scheme(&self) -> OrthoScheme {
        let o = &self.optimizer;
        match o.scheme {
            SchemeKind::Exact => OrthoScheme::ExactSvd,
            SchemeKind::NewtonSchulz => {
                OrthoScheme::NewtonSchulz(NsSchedule::resolve(&o.ns_preset, o.ns_steps, o.preset_dir.as_deref()))
            }
        }
    }

    /// Matrix and vector policies.
    pub fn policies(&self) -> std::result::Result<(UpdatePolicy, UpdatePolicy), String> {
        let o = &self.optimizer;
        if o.scheme == SchemeKind::NewtonSchulz && o.ns_steps == 0 {
            return Err("field `ns_steps`: must be at least 1".into());
        }
        let base = match o.optimizer {
            OptimizerKind::Teon => {
                let mode = o.mode.ok_or("field `mode`: required for teon")?;
                UpdatePolicy::teon(mode, o.eta)
            }
            OptimizerKind::Muon | OptimizerKind::AdamW => {
                if o.mode.is_some() {
                    return Err(format!("field `mode`: only valid for teon, not {:?}", o.optimizer));
                }
                if o.optimizer == OptimizerKind::Muon {
                    UpdatePolicy::muon(o.eta)
                } else {
                    UpdatePolicy::adamw(o.eta)
                }
            }
        };
        let matrix = base
            .with_mu(o.mu)
            .with_style(o.momentum_style)
            .with_scheme(self.scheme())
            .with_weight_decay(o.weight_decay)
            .with_betas(o.adam_betas.0, o.adam_betas.1)
            .with_eps(o.eps);
        let vector = UpdatePolicy::adamw(o.adam_eta.unwrap_or(o.eta))
            .with_weight_decay(o.weight_decay)
            .with_betas(o.adam_betas.0, o.adam_betas.1)
            .with_eps(o.eps);
        Ok((matrix, vector))
    }

    /// Group size: `[grouping].k`, else the task's natural depth.
    pub fn group_size(&self) -> usize {
        self.grouping.k.unwrap_or(match self.task.kind {
            TaskKind::Quadratic | TaskKind::AlignedQuadratic => self.task.k.unwrap_or(1),
            TaskKind::DeepLinear => self.task.depth.unwrap_or(1),
            TaskKind::MicroAttention => 2,
        })
    }

    pub fn stack_set(&self) -> BTreeSet<StackRole> {
        self.grouping.stack_set.clone().unwrap_or_else(|| {
            [StackRole::Qkv, StackRole::O, StackRole::Mlp1, StackRole::Mlp2, StackRole::Dense]
                .into_iter()
                .collect()
        })
    }

    pub fn optimizer_setup(&self) -> Result<OptimizerSetup> {
        let (matrix, vector) = self.policies().map_err(TeonError::Contract)?;
        Ok(OptimizerSetup {
            matrix,
            vector,
            k: self.group_size(),
            stack_set: self.stack_set(),
        })
    }

    pub fn alignment_source(&self) -> AlignmentSource {
        match self.alignment.source {
            AlignmentSourceConfig::Momentum => AlignmentSource::Momentum,
            AlignmentSourceConfig::Gradient => AlignmentSource::Gradient,
        }
    }

    pub fn build_task(&self) -> Result<Box<dyn Task>> {
        self.task.build(self.seed)
    }
}

impl TaskConfig {
    fn allowed(&self) -> &'static [&'static str] {
        match self.kind {
            TaskKind::Quadratic => &["m", "n", "k", "seed"],
            TaskKind::AlignedQuadratic => &["m", "n", "k", "scale", "seed"],
            TaskKind::DeepLinear => &["depth", "width", "batch", "seed"],
            TaskKind::MicroAttention => &["dim", "hidden", "seq", "batch", "blocks", "seed"],
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let fields: [(&'static str, bool); 12] = [
            ("m", self.m.is_some()),
            ("n", self.n.is_some()),
            ("k", self.k.is_some()),
            ("scale", self.scale.is_some()),
            ("depth", self.depth.is_some()),
            ("width", self.width.is_some()),
            ("batch", self.batch.is_some()),
            ("dim", self.dim.is_some()),
            ("hidden", self.hidden.is_some()),
            ("seq", self.seq.is_some()),
            ("blocks", self.blocks.is_some()),
            ("seed", self.seed.is_some()),
        ];
        for (name, set) in fields {
            if set {
                out.push(name);
            }
        }
        out
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let allowed = self.allowed();
        if let Some(bad) = self.present().into_iter().find(|f| !allowed.contains(f)) {
            return Err(format!("[task] field `{bad}`: not used by task {:?}", self.kind));
        }
        let positive = [
            ("m", self.m),
            ("n", self.n),
            ("k", self.k),
            ("depth", self.depth),
            ("width", self.width),
            ("batch", self.batch),
            ("dim", self.dim),
            ("hidden", self.hidden),
            ("seq", self.seq),
            ("blocks", self.blocks),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == Some(0)) {
            return Err(format!("[task] field `{name}`: must be positive"));
        }
        if let Some(s) = self.scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(format!("[task] field `scale`: must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// Builds the objective; unset sizes take small defaults.
    pub fn build(&self, run_seed: u64) -> Result<Box<dyn Task>> {
        let seed = self.seed.unwrap_or(run_seed);
        Ok(match self.kind {
            TaskKind::Quadratic => Box::new(StackedQuadratic::gaussian(
                self.m.unwrap_or(8),
                self.n.unwrap_or(8),
                self.k.unwrap_or(4),
                seed,
            )?),
            TaskKind::AlignedQuadratic => Box::new(StackedQuadratic::aligned(
                self.m.unwrap_or(16),
                self.n.unwrap_or(16),
                self.k.unwrap_or(4),
                self.scale.unwrap_or(1.0),
                seed,
            )?),
            TaskKind::DeepLinear => Box::new(DeepLinear::new(
                self.depth.unwrap_or(4),
                self.width.unwrap_or(16),
                self.batch.unwrap_or(32),
                seed,
            )?),
            TaskKind::MicroAttention => Box::new(MicroAttention::new(
                self.dim.unwrap_or(8),
                self.hidden.unwrap_or(16),
                self.seq.unwrap_or(4),
                self.batch.unwrap_or(4),
                self.blocks.unwrap_or(2),
                seed,
            )?),
        })
    }
}
