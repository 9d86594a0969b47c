use super::{check_params, Task};
use crate::error::{Result, TeonError};
use crate::linalg::{Matrix, Tensor3};
use crate::norms::{rank_one_cone, SharedFactor};
use crate::optim::{ModelLayout, ParamSpec, Role};
use crate::rng;

/// `f(𝒲) = ½ Σₖ ‖W⁽ᵏ⁾ − T⁽ᵏ⁾‖_F²` over `K` stacked `m × n` matrices, started
/// from zero. The gradient is `𝒲 − 𝒯`.
#[derive(Clone, Debug)]
pub struct StackedQuadratic {
    name: String,
    layout: ModelLayout,
    target: Tensor3,
}

impl StackedQuadratic {
    pub fn new(target: Tensor3, name: impl Into<String>) -> Self {
        let (m, n, k) = target.shape();
        let params = (0..k)
            .map(|b| ParamSpec::new(format!("w{b}"), Role::Dense, b, (m, n)))
            .collect();
        Self {
            name: name.into(),
            layout: ModelLayout::new(params),
            target,
        }
    }

    /// Gaussian target.
    pub fn gaussian(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(TeonError::dim(format!("empty shape ({m}, {n}, {k})")));
        }
        let mut r = rng::seeded(seed);
        Ok(Self::new(rng::gaussian_tensor(&mut r, m, n, k), "quadratic"))
    }

    /// Target `c·u⁽ᵏ⁾vᵀ` with a shared unit `v` and orthonormal `u⁽ᵏ⁾`, so the
    /// gradient at zero is `−c` times that rank-one stack. Needs `K ≤ m`.
    pub fn aligned(m: usize, n: usize, k: usize, scale: f64, seed: u64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(TeonError::Contract(format!("target scale must be positive, got {scale}")));
        }
        let cone = rank_one_cone(m, n, k, SharedFactor::Right, seed)?;
        Ok(Self::new(cone.scale(scale), "aligned_quadratic"))
    }

    pub fn target(&self) -> &Tensor3 {
        &self.target
    }
}

impl Task for StackedQuadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn layout(&self) -> &ModelLayout {
        &self.layout
    }

    fn init(&self) -> Vec<Matrix> {
        let (m, n, k) = self.target.shape();
        vec![Matrix::zeros(m, n); k]
    }

    fn loss_and_grad(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        check_params(&self.layout, params)?;
        let grads: Vec<Matrix> = params.iter().zip(self.target.slices()).map(|(w, t)| w.sub(t)).collect();
        let loss = 0.5 * grads.iter().map(Matrix::frobenius_sq).sum::<f64>();
        Ok((loss, grads))
    }
}
