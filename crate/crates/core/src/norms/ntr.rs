//! Exact minimizers of `⟨G, Δ⟩` over the norm ball `‖Δ‖ ≤ η`.

use super::NormFamily;
use crate::error::{Result, TeonError};
use crate::linalg::{fold, matricize, Mode, Real, Tensor3};
use crate::ortho::ortho_exact;

fn check_eta<T: Real>(eta: T) -> Result<()> {
    if !(eta.is_finite() && eta > T::zero()) {
        return Err(TeonError::Contract(format!("trust-region radius must be positive, got {eta}")));
    }
    Ok(())
}

/// `−η · ℳᵢ⁻¹(U Vᵀ)` for the thin SVD `ℳᵢ(G) = U Σ Vᵀ`. The optimal value
/// of the linearized objective is `−η‖G‖_{teon-i,*}`.
pub fn ntr_step_teon<T: Real>(g: &Tensor3<T>, mode: Mode, eta: T) -> Result<Tensor3<T>> {
    check_eta(eta)?;
    let polar = ortho_exact(&matricize(g, mode))?;
    Ok(fold(&polar, mode, g.shape())?.scale(-eta))
}

/// Slice-wise `−η · U⁽ᵏ⁾V⁽ᵏ⁾ᵀ`; the problem decouples because the Muon ball
/// is a product of per-slice spectral balls.
pub fn ntr_step_muon<T: Real>(g: &Tensor3<T>, eta: T) -> Result<Tensor3<T>> {
    check_eta(eta)?;
    let slices = g
        .slices()
        .iter()
        .map(|s| Ok(ortho_exact(s)?.scale(-eta)))
        .collect::<Result<Vec<_>>>()?;
    Tensor3::from_slices(slices)
}

pub fn ntr_step<T: Real>(g: &Tensor3<T>, family: NormFamily, eta: T) -> Result<Tensor3<T>> {
    match family {
        NormFamily::Muon => ntr_step_muon(g, eta),
        NormFamily::Teon(mode) => ntr_step_teon(g, mode, eta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use crate::norms::{norm, NormKind};
    use crate::rng;

    #[test]
    fn optimal_value_is_negative_dual_norm() {
        let mut r = rng::seeded(5);
        let g: Tensor3 = rng::gaussian_tensor(&mut r, 3, 4, 3);
        let eta = 0.37;
        for mode in Mode::ALL {
            let step = ntr_step_teon(&g, mode, eta).unwrap();
            let value = inner(&g, &step).unwrap();
            let dual = norm(&g, NormKind::teon_dual(mode)).unwrap();
            assert!((value + eta * dual).abs() <= 1e-10);
            assert!((norm(&step, NormKind::teon(mode)).unwrap() - eta).abs() <= 1e-10);
        }
        let step = ntr_step_muon(&g, eta).unwrap();
        let value = inner(&g, &step).unwrap();
        assert!((value + eta * norm(&g, NormKind::MUON_DUAL).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn single_slice_teon_is_muon() {
        let mut r = rng::seeded(6);
        let g: Tensor3 = rng::gaussian_tensor(&mut r, 3, 5, 1);
        let a = ntr_step_teon(&g, Mode::One, 0.5).unwrap();
        let b = ntr_step_muon(&g, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_slices_give_identical_muon_updates() {
        let mut r = rng::seeded(7);
        let a = rng::gaussian_matrix::<f64>(&mut r, 3, 3);
        let g = Tensor3::from_slices(vec![a.clone(), a.clone(), a]).unwrap();
        let step = ntr_step_muon(&g, 1.0).unwrap();
        assert_eq!(step.slice(0), step.slice(1));
        assert_eq!(step.slice(1), step.slice(2));
    }

    #[test]
    fn rejects_bad_radius() {
        let g = Tensor3::<f64>::zeros(2, 2, 2);
        assert!(ntr_step_muon(&g, 0.0).is_err());
        assert!(ntr_step_teon(&g, Mode::One, f64::NAN).is_err());
    }
}
