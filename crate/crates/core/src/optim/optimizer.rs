//! Stateful optimizer over a whole model.

use std::collections::BTreeSet;

use super::adamw::{adamw_update, AdamState};
use super::groups::{build_groups, GroupKind, ModelLayout, ParamGroup, StackRole};
use super::{muon_update, teon_update, OptimizerKind, UpdatePolicy};
use crate::error::{Result, TeonError};
use crate::linalg::{Matrix, Tensor3};

/// How a model is split into groups and which policies apply.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSetup {
    /// Policy for matrices. With TEON, stacked groups use it as is and
    /// unstacked matrices get the Muon policy with the same hyperparameters.
    pub matrix: UpdatePolicy,
    /// Policy for vectors; must be AdamW.
    pub vector: UpdatePolicy,
    /// Group size `K` (TEON only).
    pub k: usize,
    pub stack_set: BTreeSet<StackRole>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupState {
    Tensor(Tensor3),
    Matrix(Matrix),
    Adam(AdamState),
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    layout: ModelLayout,
    groups: Vec<ParamGroup>,
    policies: Vec<UpdatePolicy>,
    states: Vec<GroupState>,
    step: u64,
}

impl Optimizer {
    pub fn new(layout: &ModelLayout, setup: &OptimizerSetup) -> Result<Self> {
        setup.matrix.validate()?;
        setup.vector.validate()?;
        if setup.vector.optimizer != OptimizerKind::AdamW {
            return Err(TeonError::Contract("vector parameters need an AdamW policy".into()));
        }
        let groups = match setup.matrix.optimizer {
            OptimizerKind::Teon => build_groups(layout, setup.k, &setup.stack_set)?,
            OptimizerKind::Muon | OptimizerKind::AdamW => build_groups(layout, 1, &BTreeSet::new())?,
        };
        let mut policies = Vec::with_capacity(groups.len());
        let mut states = Vec::with_capacity(groups.len());
        for g in &groups {
            let (rows, cols) = g.shape;
            let policy = match (g.kind, setup.matrix.optimizer) {
                (GroupKind::VectorAdamW, _) => setup.vector.clone(),
                (GroupKind::MatrixSingle, OptimizerKind::Teon) => UpdatePolicy {
                    optimizer: OptimizerKind::Muon,
                    mode: None,
                    ..setup.matrix.clone()
                },
                _ => setup.matrix.clone(),
            };
            let state = match policy.optimizer {
                OptimizerKind::Teon => GroupState::Tensor(Tensor3::zeros(rows, cols, g.depth())),
                OptimizerKind::Muon => GroupState::Matrix(Matrix::zeros(rows, cols)),
                OptimizerKind::AdamW => GroupState::Adam(AdamState::zeros(rows, cols)),
            };
            policies.push(policy);
            states.push(state);
        }
        Ok(Self {
            layout: layout.clone(),
            groups,
            policies,
            states,
            step: 0,
        })
    }

    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }

    pub fn policy(&self, group: usize) -> &UpdatePolicy {
        &self.policies[group]
    }

    pub fn state(&self, group: usize) -> &GroupState {
        &self.states[group]
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to every group with learning rate `factor·η`.
    pub fn step(&mut self, params: &mut [Matrix], grads: &[Matrix], factor: f64) -> Result<()> {
        if params.len() != self.layout.len() || grads.len() != self.layout.len() {
            return Err(TeonError::dim(format!(
                "expected {} parameters and gradients, got {} and {}",
                self.layout.len(),
                params.len(),
                grads.len()
            )));
        }
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(TeonError::Contract(format!("learning-rate factor {factor} is invalid")));
        }
        for ((group, policy), state) in self.groups.iter().zip(&self.policies).zip(self.states.iter_mut()) {
            let lr = factor * policy.eta;
            match state {
                GroupState::Tensor(momentum) => {
                    let gather = |src: &[Matrix]| {
                        Tensor3::from_slices(group.members.iter().map(|&i| src[i].clone()).collect())
                    };
                    let ws = gather(params)?;
                    let gs = gather(grads)?;
                    let next = teon_update(&ws, &gs, momentum, policy, lr, self.step, &group.id)?;
                    for (&i, w) in group.members.iter().zip(next.into_slices()) {
                        params[i] = w;
                    }
                }
                GroupState::Matrix(momentum) => {
                    let i = group.members[0];
                    params[i] = muon_update(&params[i], &grads[i], momentum, policy, lr, self.step, &group.id)?;
                }
                GroupState::Adam(adam) => {
                    let i = group.members[0];
                    params[i] = adamw_update(&params[i], &grads[i], adam, policy, lr, self.step, &group.id)?;
                }
            }
        }
        self.step += 1;
        Ok(())
    }

    /// Momentum buffer of parameter `param` (first moment for AdamW).
    pub fn momentum_of(&self, param: usize) -> Option<Matrix> {
        self.groups.iter().zip(&self.states).find_map(|(g, s)| {
            let pos = g.members.iter().position(|&i| i == param)?;
            Some(match s {
                GroupState::Tensor(t) => t.slice(pos).clone(),
                GroupState::Matrix(m) => m.clone(),
                GroupState::Adam(a) => a.first.clone(),
            })
        })
    }
}
