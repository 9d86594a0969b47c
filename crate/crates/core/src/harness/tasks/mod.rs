//! Synthetic objectives with exact gradients.

mod deep_linear;
mod micro_attention;
mod quadratic;

pub use deep_linear::DeepLinear;
pub use micro_attention::MicroAttention;
pub use quadratic::StackedQuadratic;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::optim::ModelLayout;

/// An objective over a list of named matrices.
pub trait Task: Send + Sync {
    fn name(&self) -> &str;

    fn layout(&self) -> &ModelLayout;

    /// Starting parameters, one matrix per layout entry.
    fn init(&self) -> Vec<Matrix>;

    fn loss_and_grad(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)>;

    fn loss(&self, params: &[Matrix]) -> Result<f64> {
        Ok(self.loss_and_grad(params)?.0)
    }
}

pub(crate) fn check_params(layout: &ModelLayout, params: &[Matrix]) -> Result<()> {
    if params.len() != layout.len() {
        return Err(crate::TeonError::dim(format!(
            "expected {} parameters, got {}",
            layout.len(),
            params.len()
        )));
    }
    for (spec, p) in layout.params.iter().zip(params) {
        if p.shape() != spec.shape {
            return Err(crate::TeonError::dim(format!(
                "`{}` should be {:?}, got {:?}",
                spec.name,
                spec.shape,
                p.shape()
            )));
        }
    }
    Ok(())
}
