//! Assignment of model parameters to update groups.
//!
//! Matrices whose role is in the stack set are stacked across `K` consecutive
//! blocks by type (queries with queries, keys with keys). When the block count
//! is not a multiple of `K` the leftover blocks form one shallower group. Every
//! other matrix is updated on its own, and vectors go to AdamW.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeonError};

/// What a parameter is inside its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Query,
    Key,
    Value,
    Output,
    Mlp1,
    Mlp2,
    /// Weight of a plain dense layer.
    Dense,
    /// A vector parameter; always handled by AdamW.
    Bias,
}

impl Role {
    pub const MATRICES: [Role; 7] = [
        Role::Query,
        Role::Key,
        Role::Value,
        Role::Output,
        Role::Mlp1,
        Role::Mlp2,
        Role::Dense,
    ];

    pub fn stack_role(self) -> Option<StackRole> {
        match self {
            Role::Query | Role::Key | Role::Value => Some(StackRole::Qkv),
            Role::Output => Some(StackRole::O),
            Role::Mlp1 => Some(StackRole::Mlp1),
            Role::Mlp2 => Some(StackRole::Mlp2),
            Role::Dense => Some(StackRole::Dense),
            Role::Bias => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::Query => "q",
            Role::Key => "k",
            Role::Value => "v",
            Role::Output => "o",
            Role::Mlp1 => "mlp1",
            Role::Mlp2 => "mlp2",
            Role::Dense => "dense",
            Role::Bias => "bias",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Layer types that may be stacked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackRole {
    Qkv,
    O,
    Mlp1,
    Mlp2,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub role: Role,
    pub block: usize,
    pub shape: (usize, usize),
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, role: Role, block: usize, shape: (usize, usize)) -> Self {
        Self {
            name: name.into(),
            role,
            block,
            shape,
        }
    }
}

/// Ordered parameter list of a model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelLayout {
    pub params: Vec<ParamSpec>,
}

impl ModelLayout {
    pub fn new(params: Vec<ParamSpec>) -> Self {
        Self { params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Same-role matrices from consecutive blocks, updated by TEON.
    TensorGroup,
    /// One matrix updated by Muon.
    MatrixSingle,
    /// One vector updated by AdamW.
    VectorAdamW,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamGroup {
    pub id: String,
    pub kind: GroupKind,
    /// Indices into the layout, in block order.
    pub members: Vec<usize>,
    /// Shape shared by every member.
    pub shape: (usize, usize),
}

impl ParamGroup {
    pub fn depth(&self) -> usize {
        self.members.len()
    }
}

pub fn build_groups(layout: &ModelLayout, k: usize, stack_set: &BTreeSet<StackRole>) -> Result<Vec<ParamGroup>> {
    if layout.is_empty() {
        return Err(TeonError::Contract("model layout is empty".into()));
    }
    if k == 0 {
        return Err(TeonError::Contract("group size K must be at least 1".into()));
    }
    let mut groups = Vec::new();
    let mut grouped = vec![false; layout.len()];
    for role in Role::MATRICES {
        if !role.stack_role().is_some_and(|s| stack_set.contains(&s)) {
            continue;
        }
        let mut members: Vec<usize> = (0..layout.len()).filter(|&i| layout.params[i].role == role).collect();
        members.sort_by_key(|&i| layout.params[i].block);
        for chunk in members.chunks(k) {
            let shape = layout.params[chunk[0]].shape;
            if let Some(&bad) = chunk.iter().find(|&&i| layout.params[i].shape != shape) {
                return Err(TeonError::dim(format!(
                    "cannot stack `{}` {:?} with `{}` {:?}",
                    layout.params[chunk[0]].name,
                    shape,
                    layout.params[bad].name,
                    layout.params[bad].shape
                )));
            }
            let first = layout.params[chunk[0]].block;
            let last = layout.params[*chunk.last().expect("chunks are nonempty")].block;
            for &i in chunk {
                grouped[i] = true;
            }
            groups.push(ParamGroup {
                id: format!("{role}[{first}..={last}]"),
                kind: GroupKind::TensorGroup,
                members: chunk.to_vec(),
                shape,
            });
        }
    }
    for (i, p) in layout.params.iter().enumerate() {
        if grouped[i] {
            continue;
        }
        let kind = if p.role == Role::Bias {
            GroupKind::VectorAdamW
        } else {
            GroupKind::MatrixSingle
        };
        groups.push(ParamGroup {
            id: p.name.clone(),
            kind,
            members: vec![i],
            shape: p.shape,
        });
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transformer(blocks: usize) -> ModelLayout {
        let mut params = Vec::new();
        for b in 0..blocks {
            for (role, shape) in [
                (Role::Query, (8, 8)),
                (Role::Key, (8, 8)),
                (Role::Value, (8, 8)),
                (Role::Output, (8, 8)),
                (Role::Mlp1, (8, 32)),
                (Role::Mlp2, (32, 8)),
                (Role::Bias, (1, 32)),
            ] {
                params.push(ParamSpec::new(format!("block{b}.{role}"), role, b, shape));
            }
        }
        ModelLayout::new(params)
    }

    fn set(roles: &[StackRole]) -> BTreeSet<StackRole> {
        roles.iter().copied().collect()
    }

    fn count(groups: &[ParamGroup], kind: GroupKind) -> usize {
        groups.iter().filter(|g| g.kind == kind).count()
    }

    fn assert_partition(layout: &ModelLayout, groups: &[ParamGroup]) {
        let mut seen: Vec<usize> = groups.iter().flat_map(|g| g.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..layout.len()).collect::<Vec<_>>());
    }

    #[test]
    fn qkv_pairs_over_twelve_blocks() {
        let layout = transformer(12);
        let groups = build_groups(&layout, 2, &set(&[StackRole::Qkv])).unwrap();
        assert_eq!(count(&groups, GroupKind::TensorGroup), 18);
        assert!(groups.iter().filter(|g| g.kind == GroupKind::TensorGroup).all(|g| g.depth() == 2));
        assert_eq!(count(&groups, GroupKind::MatrixSingle), 12 * 3);
        assert_eq!(count(&groups, GroupKind::VectorAdamW), 12);
        assert_partition(&layout, &groups);
        let first = &groups[0];
        assert_eq!(first.id, "q[0..=1]");
        assert!(first.members.iter().all(|&i| layout.params[i].role == Role::Query));
    }

    #[test]
    fn whole_depth_groups() {
        let layout = transformer(12);
        let groups = build_groups(&layout, 12, &set(&[StackRole::Qkv])).unwrap();
        let tensors: Vec<_> = groups.iter().filter(|g| g.kind == GroupKind::TensorGroup).collect();
        assert_eq!(tensors.len(), 3);
        assert!(tensors.iter().all(|g| g.depth() == 12));
    }

    #[test]
    fn remainder_group() {
        let layout = transformer(5);
        let groups = build_groups(&layout, 2, &set(&[StackRole::Qkv, StackRole::Mlp1])).unwrap();
        for role in [Role::Query, Role::Key, Role::Value, Role::Mlp1] {
            let depths: Vec<usize> = groups
                .iter()
                .filter(|g| g.kind == GroupKind::TensorGroup && layout.params[g.members[0]].role == role)
                .map(ParamGroup::depth)
                .collect();
            assert_eq!(depths, vec![2, 2, 1], "{role}");
        }
        assert_partition(&layout, &groups);
    }

    #[test]
    fn errors() {
        assert!(build_groups(&ModelLayout::default(), 2, &set(&[])).is_err());
        let layout = ModelLayout::new(vec![
            ParamSpec::new("a", Role::Dense, 0, (3, 3)),
            ParamSpec::new("b", Role::Dense, 1, (3, 4)),
        ]);
        assert!(build_groups(&layout, 2, &set(&[StackRole::Dense])).is_err());
        assert!(build_groups(&layout, 0, &set(&[])).is_err());
    }
}
