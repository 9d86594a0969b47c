//! Central finite-difference gradient checks.
//!
//! Errors are scaled by `max(1, |reference|)`, so large gradients are held to
//! a relative standard and small ones to an absolute one.

use super::tasks::Task;
use crate::error::{Result, TeonError};
use crate::linalg::Matrix;
use crate::rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-5;

/// Largest scaled error per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub errors: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

fn scaled(err: f64, reference: f64) -> f64 {
    err / reference.abs().max(1.0)
}

/// Checks every entry of every parameter against `(f(p+h) − f(p−h)) / 2h`.
pub fn check_entries(task: &dyn Task, point: &[Matrix], tolerance: f64) -> Result<GradCheckReport> {
    let (_, grads) = task.loss_and_grad(point)?;
    let mut params = point.to_vec();
    let mut errors = Vec::with_capacity(point.len());
    for (idx, spec) in task.layout().params.iter().enumerate() {
        let mut worst: f64 = 0.0;
        let (rows, cols) = spec.shape;
        for i in 0..rows {
            for j in 0..cols {
                let orig = params[idx].get(i, j);
                params[idx].set(i, j, orig + STEP);
                let plus = task.loss(&params)?;
                params[idx].set(i, j, orig - STEP);
                let minus = task.loss(&params)?;
                params[idx].set(i, j, orig);
                let fd = (plus - minus) / (2.0 * STEP);
                let analytic = grads[idx].get(i, j);
                worst = worst.max(scaled((fd - analytic).abs(), analytic));
            }
        }
        if worst.is_nan() || worst > tolerance {
            return Err(TeonError::GradientCheck {
                param: spec.name.clone(),
                error: worst,
                tolerance,
            });
        }
        errors.push((spec.name.clone(), worst));
    }
    Ok(GradCheckReport { errors })
}

/// Compares `⟨∇f, Δ⟩` with central differences along `count` random unit
/// directions `Δ` spanning all parameters.
pub fn check_directions(task: &dyn Task, point: &[Matrix], count: usize, seed: u64, tolerance: f64) -> Result<f64> {
    let (_, grads) = task.loss_and_grad(point)?;
    let mut r = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let mut dirs: Vec<Matrix> = point.iter().map(|p| rng::gaussian_matrix(&mut r, p.rows(), p.cols())).collect();
        let total: f64 = dirs.iter().map(Matrix::frobenius_sq).sum::<f64>().sqrt();
        for d in &mut dirs {
            d.scale_in_place(1.0 / total);
        }
        let shifted = |sign: f64| -> Vec<Matrix> {
            point
                .iter()
                .zip(&dirs)
                .map(|(p, d)| {
                    let mut q = p.clone();
                    q.add_scaled(sign * STEP, d);
                    q
                })
                .collect()
        };
        let fd = (task.loss(&shifted(1.0))? - task.loss(&shifted(-1.0))?) / (2.0 * STEP);
        let analytic: f64 = grads.iter().zip(&dirs).map(|(g, d)| g.inner(d)).sum();
        worst = worst.max(scaled((fd - analytic).abs(), analytic));
    }
    if worst.is_nan() || worst > tolerance {
        return Err(TeonError::GradientCheck {
            param: format!("{} (directional)", task.name()),
            error: worst,
            tolerance,
        });
    }
    Ok(worst)
}
