//! Closed-form convergence-bound evaluators.

use crate::error::{Result, TeonError};

/// Inputs of the momentum NTR bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    /// `f(W₀) − f*`
    pub delta0: f64,
    /// Smoothness constant.
    pub l: f64,
    pub eta: f64,
    /// Momentum, in `[0, 1)`.
    pub mu: f64,
    /// Gradient noise level.
    pub sigma: f64,
    /// Norm–Frobenius equivalence constant.
    pub rho: f64,
    /// Iteration count.
    pub t: u64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta0, self.l, self.eta, self.mu, self.sigma, self.rho]
            .iter()
            .all(|x| x.is_finite());
        let ok = finite
            && self.delta0 >= 0.0
            && self.l > 0.0
            && self.eta > 0.0
            && (0.0..1.0).contains(&self.mu)
            && self.sigma >= 0.0
            && self.rho > 0.0
            && self.t >= 1;
        if ok {
            Ok(())
        } else {
            Err(TeonError::Contract(format!("invalid bound inputs {self:?}")))
        }
    }
}

/// `Δ₀/(ηT) + 3√(LΔ₀/T)·μ/(1−μ) + Lη/2 + Lη·μ/(1−μ) + 2(1−μ)ρσ/T + ρσ√((1−μ)/(1+μ))`.
pub fn eval_ntr_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let t = b.t as f64;
    let momentum = b.mu / (1.0 - b.mu);
    let terms = [
        b.delta0 / (b.eta * t),
        3.0 * (b.l * b.delta0 / t).sqrt() * momentum,
        b.l * b.eta / 2.0,
        b.l * b.eta * momentum,
        2.0 * (1.0 - b.mu) * b.rho * b.sigma / t,
        b.rho * b.sigma * ((1.0 - b.mu) / (1.0 + b.mu)).sqrt(),
    ];
    Ok(terms.iter().sum())
}

/// Minimizer of the deterministic, momentum-free bound: `√(2Δ₀/(TL))`.
pub fn optimal_eta(delta0: f64, l: f64, t: u64) -> f64 {
    (2.0 * delta0 / (t as f64 * l)).sqrt()
}

/// `√(2LΔ₀/T)`.
pub fn simplified_bound(delta0: f64, l: f64, t: u64) -> f64 {
    (2.0 * l * delta0 / t as f64).sqrt()
}

/// `(√(2·L_teon·Δ₀/T), √(2·L_muon·Δ₀/T))`; requires `0 < L_teon ≤ L_muon`.
pub fn convergence_bound_pair(delta0: f64, t: u64, l_teon: f64, l_muon: f64) -> Result<(f64, f64)> {
    if !(l_teon > 0.0 && l_teon.is_finite() && l_muon.is_finite() && delta0 >= 0.0 && t >= 1) {
        return Err(TeonError::Contract(format!(
            "bound pair needs L_teon > 0, Δ₀ ≥ 0, T ≥ 1 (got L_teon={l_teon}, Δ₀={delta0}, T={t})"
        )));
    }
    if l_muon < l_teon {
        return Err(TeonError::Contract(format!(
            "L_muon ({l_muon}) must be at least L_teon ({l_teon})"
        )));
    }
    Ok((simplified_bound(delta0, l_teon, t), simplified_bound(delta0, l_muon, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(delta0: f64, l: f64, eta: f64, t: u64) -> BoundInputs {
        BoundInputs { delta0, l, eta, mu: 0.0, sigma: 0.0, rho: 1.0, t }
    }

    #[test]
    fn plug_in_value() {
        // 2/(0.2·100) + 1·0.2/2 = 0.1 + 0.1
        let v = eval_ntr_bound(&inputs(2.0, 1.0, 0.2, 100)).unwrap();
        assert!((v - 0.2).abs() <= 1e-15);
    }

    #[test]
    fn noise_and_momentum_free_terms() {
        let b = inputs(3.0, 2.5, 0.01, 40);
        let v = eval_ntr_bound(&b).unwrap();
        assert_eq!(v, 3.0 / (0.01 * 40.0) + 2.5 * 0.01 / 2.0);
    }

    #[test]
    fn full_formula_by_hand() {
        let b = BoundInputs { delta0: 1.0, l: 4.0, eta: 0.5, mu: 0.5, sigma: 2.0, rho: 1.0, t: 4 };
        // 0.5 + 3·1·1 + 1 + 2 + 2·0.5·2/4 + 2·√(1/3)
        let expected = 0.5 + 3.0 + 1.0 + 2.0 + 0.5 + 2.0 * (1.0f64 / 3.0).sqrt();
        assert!((eval_ntr_bound(&b).unwrap() - expected).abs() <= 1e-14);
    }

    #[test]
    fn optimal_eta_recovers_simplified_bound() {
        let eta = optimal_eta(5.0, 3.0, 200);
        let v = eval_ntr_bound(&inputs(5.0, 3.0, eta, 200)).unwrap();
        assert!((v - simplified_bound(5.0, 3.0, 200)).abs() <= 1e-14);
    }

    #[test]
    fn invalid_inputs() {
        let mut b = inputs(1.0, 1.0, 1.0, 1);
        b.mu = 1.0;
        assert!(eval_ntr_bound(&b).is_err());
        b.mu = 0.0;
        b.t = 0;
        assert!(eval_ntr_bound(&b).is_err());
        b.t = 1;
        b.eta = -1.0;
        assert!(eval_ntr_bound(&b).is_err());
    }

    #[test]
    fn bound_pair() {
        assert_eq!(convergence_bound_pair(1.0, 1, 2.0, 8.0).unwrap(), (2.0, 4.0));
        let (a, b) = convergence_bound_pair(3.0, 10, 1.5, 1.5).unwrap();
        assert_eq!(a, b);
        let (a, b) = convergence_bound_pair(3.0, 10, 1.5, 6.0).unwrap();
        assert!((b / a - 2.0).abs() <= 1e-15);
        assert!(convergence_bound_pair(1.0, 1, 2.0, 1.0).is_err());
        assert!(convergence_bound_pair(1.0, 1, 0.0, 1.0).is_err());
    }
}
