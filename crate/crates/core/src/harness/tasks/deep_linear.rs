use super::{check_params, Task};
use crate::error::{Result, TeonError};
use crate::linalg::Matrix;
use crate::optim::{ModelLayout, ParamSpec, Role};
use crate::rng;

/// Least squares through a product of square layers:
/// `f = 1/(2B) ‖W⁽ᴺ⁾⋯W⁽¹⁾X − Y‖_F²` with `X, Y` of shape `width × batch`.
/// Targets come from a random linear teacher; layers start near identity.
#[derive(Clone, Debug)]
pub struct DeepLinear {
    layout: ModelLayout,
    x: Matrix,
    y: Matrix,
    init: Vec<Matrix>,
}

impl DeepLinear {
    pub fn new(depth: usize, width: usize, batch: usize, seed: u64) -> Result<Self> {
        if depth == 0 || width == 0 || batch == 0 {
            return Err(TeonError::dim(format!(
                "deep_linear needs positive depth, width and batch (got {depth}, {width}, {batch})"
            )));
        }
        let mut r = rng::seeded(seed);
        let x = rng::gaussian_matrix(&mut r, width, batch);
        let teacher = rng::gaussian_matrix::<f64>(&mut r, width, width).scale(1.0 / (width as f64).sqrt());
        let y = teacher.matmul(&x);
        let jitter = 0.1 / (width as f64).sqrt();
        let init = (0..depth)
            .map(|_| Matrix::identity(width).add(&rng::gaussian_matrix(&mut r, width, width).scale(jitter)))
            .collect();
        Self::with_data(x, y, init)
    }

    /// Explicit inputs, targets and starting layers.
    pub fn with_data(x: Matrix, y: Matrix, init: Vec<Matrix>) -> Result<Self> {
        let width = x.rows();
        if y.shape() != x.shape() || init.is_empty() || init.iter().any(|w| w.shape() != (width, width)) {
            return Err(TeonError::dim("deep_linear needs X, Y of equal shape and square layers".to_string()));
        }
        let params = (0..init.len())
            .map(|b| ParamSpec::new(format!("layer{b}"), Role::Dense, b, (width, width)))
            .collect();
        Ok(Self {
            layout: ModelLayout::new(params),
            x,
            y,
            init,
        })
    }
}

impl Task for DeepLinear {
    fn name(&self) -> &str {
        "deep_linear"
    }

    fn layout(&self) -> &ModelLayout {
        &self.layout
    }

    fn init(&self) -> Vec<Matrix> {
        self.init.clone()
    }

    fn loss_and_grad(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        check_params(&self.layout, params)?;
        let batch = self.x.cols() as f64;
        let mut acts = Vec::with_capacity(params.len() + 1);
        acts.push(self.x.clone());
        for w in params {
            let next = w.matmul(acts.last().expect("nonempty"));
            acts.push(next);
        }
        let residual = acts.last().expect("nonempty").sub(&self.y);
        let loss = residual.frobenius_sq() / (2.0 * batch);
        let mut delta = residual.scale(1.0 / batch);
        let mut grads = vec![Matrix::zeros(1, 1); params.len()];
        for k in (0..params.len()).rev() {
            grads[k] = delta.matmul_t(&acts[k]);
            if k > 0 {
                delta = params[k].t_matmul(&delta);
            }
        }
        Ok((loss, grads))
    }
}
