//! Random points of Muon and TEON norm balls.
//!
//! These back sampling-based checks: the dual norm as a supremum of `⟨G, Y⟩`
//! over the unit primal ball, and steepest-descent steps compared against
//! arbitrary feasible directions. Only primal norms are evaluated here, so the
//! checks are independent of the closed-form dual norms.

use rand::Rng as _;

use super::{norm, NormFamily, NormKind};
use crate::error::Result;
use crate::linalg::{fold, inner, matricize, Matrix, Mode, Tensor3};
use crate::ortho::ortho_exact;
use crate::rng::{self, Rng};

/// Haar-distributed matrix with orthonormal rows or columns.
pub fn random_semi_orthogonal(rng: &mut Rng, rows: usize, cols: usize) -> Result<Matrix> {
    ortho_exact(&rng::gaussian_matrix(rng, rows, cols))
}

/// An extreme point of the unit primal ball: a folded semi-orthogonal
/// unfolding for TEON, independent semi-orthogonal slices for Muon.
pub fn extreme_point(rng: &mut Rng, shape: (usize, usize, usize), family: NormFamily) -> Result<Tensor3> {
    let (m, n, k) = shape;
    match family {
        NormFamily::Muon => {
            let slices = (0..k)
                .map(|_| random_semi_orthogonal(rng, m, n))
                .collect::<Result<Vec<_>>>()?;
            Tensor3::from_slices(slices)
        }
        NormFamily::Teon(mode) => {
            let (rows, cols) = unfolded_shape(shape, mode);
            fold(&random_semi_orthogonal(rng, rows, cols)?, mode, shape)
        }
    }
}

fn unfolded_shape((m, n, k): (usize, usize, usize), mode: Mode) -> (usize, usize) {
    match mode {
        Mode::One => (m, n * k),
        Mode::Two => (n, m * k),
        Mode::Three => (k, m * n),
    }
}

/// Gaussian direction rescaled to primal norm exactly `radius`.
pub fn sphere_point(
    rng: &mut Rng,
    shape: (usize, usize, usize),
    family: NormFamily,
    radius: f64,
) -> Result<Tensor3> {
    let (m, n, k) = shape;
    loop {
        let t: Tensor3 = rng::gaussian_tensor(rng, m, n, k);
        let size = norm(&t, NormKind::primal(family))?;
        if size > 1e-12 {
            return Ok(t.scale(radius / size));
        }
    }
}

/// Point of the ball `‖Δ‖ ≤ eta`: a Gaussian direction at a uniformly drawn
/// radius, or (half the time) a scaled extreme point on the boundary.
pub fn feasible_point(
    rng: &mut Rng,
    shape: (usize, usize, usize),
    family: NormFamily,
    eta: f64,
) -> Result<Tensor3> {
    if rng.random_bool(0.5) {
        Ok(extreme_point(rng, shape, family)?.scale(eta))
    } else {
        let radius = eta * rng.random::<f64>();
        sphere_point(rng, shape, family, radius)
    }
}

/// Lower estimate of `sup { ⟨g, y⟩ : ‖y‖ ≤ 1 }` from `samples` feasible
/// evaluations. The first half are independent draws (sphere and extreme
/// points); the rest refine the best draw by random perturbation, projected
/// back onto the extreme points, with a shrinking step. Every evaluated point
/// is feasible, so the result never exceeds the true supremum.
pub fn sampled_dual_norm(g: &Tensor3, family: NormFamily, samples: usize, rng: &mut Rng) -> Result<f64> {
    let shape = g.shape();
    let mut best_value = f64::NEG_INFINITY;
    let mut best = Tensor3::zeros(shape.0, shape.1, shape.2);
    let explore = samples.div_ceil(2);
    for i in 0..explore {
        let y = if i % 2 == 0 {
            extreme_point(rng, shape, family)?
        } else {
            sphere_point(rng, shape, family, 1.0)?
        };
        let value = inner(g, &y)?;
        if value > best_value {
            best_value = value;
            best = y;
        }
    }
    let mut step = 0.3;
    let mut stalled = 0;
    for _ in explore..samples {
        let noise = sphere_point(rng, shape, family, step)?;
        let Some(candidate) = to_extreme_point(&best.add(&noise), family)? else {
            continue;
        };
        let value = inner(g, &candidate)?;
        if value > best_value {
            best_value = value;
            best = candidate;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 20 {
                step = (step * 0.7f64).max(1e-4);
                stalled = 0;
            }
        }
    }
    Ok(best_value.max(0.0))
}

/// Nearest extreme point of the unit ball: the polar factor of each slice
/// (Muon) or of the unfolding (TEON). `None` for numerically zero input.
fn to_extreme_point(t: &Tensor3, family: NormFamily) -> Result<Option<Tensor3>> {
    if t.frobenius() <= 1e-12 {
        return Ok(None);
    }
    let point = match family {
        NormFamily::Muon => Tensor3::from_slices(t.slices().iter().map(ortho_exact).collect::<Result<Vec<_>>>()?)?,
        NormFamily::Teon(mode) => fold(&ortho_exact(&matricize(t, mode))?, mode, t.shape())?,
    };
    Ok(Some(point))
}
