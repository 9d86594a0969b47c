//! Rank-one slice families where the Muon/TEON comparability is tight.
//!
//! With block-concatenated unfoldings, `ℳ₁ = [X⁽¹⁾ … X⁽ᴷ⁾]`. If every slice
//! is `u v⁽ᵏ⁾ᵀ` with a shared left factor `u` and orthonormal `v⁽ᵏ⁾`, then
//! `ℳ₁ = u [v⁽¹⁾ᵀ … v⁽ᴷ⁾ᵀ]` is rank one with norm `√K`, while every slice
//! has norm 1. The shared-right family `u⁽ᵏ⁾ vᵀ` is tight for mode 2 by the
//! same argument on `ℳ₂ = [X⁽¹⁾ᵀ … X⁽ᴷ⁾ᵀ]`, and leaves `ℳ₁` with `K` equal
//! singular values.

use crate::error::{Result, TeonError};
use crate::linalg::{Matrix, Mode, Real, Tensor3};
use crate::rng::{self, Rng};

/// Which singular vector the rank-one slices share.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharedFactor {
    /// Slices `u⁽ᵏ⁾ vᵀ`: shared right vector, orthonormal left vectors.
    Right,
    /// Slices `u v⁽ᵏ⁾ᵀ`: shared left vector, orthonormal right vectors.
    Left,
}

/// `k` orthonormal vectors of length `len`, from a Gram–Schmidt QR of a
/// Gaussian matrix (two orthogonalization passes).
pub fn orthonormal_columns<T: Real>(rng: &mut Rng, len: usize, k: usize) -> Result<Vec<Vec<T>>> {
    if k > len {
        return Err(TeonError::dim(format!("cannot fit {k} orthonormal vectors in dimension {len}")));
    }
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<T> = (0..len).map(|_| rng::gaussian(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let proj: T = v.iter().zip(b).map(|(&x, &y)| x * y).sum();
                for (x, &y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::of(1e-8) {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(basis)
}

/// `K` rank-one `m × n` slices sharing one unit singular vector, with the
/// other side orthonormal across slices.
pub fn rank_one_cone<T: Real>(
    m: usize,
    n: usize,
    k: usize,
    shared: SharedFactor,
    seed: u64,
) -> Result<Tensor3<T>> {
    if m == 0 || n == 0 || k == 0 {
        return Err(TeonError::dim(format!("empty shape ({m}, {n}, {k})")));
    }
    let mut r = rng::seeded(seed);
    let slices = match shared {
        SharedFactor::Right => {
            let us = orthonormal_columns::<T>(&mut r, m, k)?;
            let v = rng::unit_vector::<T>(&mut r, n);
            us.iter().map(|u| Matrix::outer(u, &v)).collect()
        }
        SharedFactor::Left => {
            let vs = orthonormal_columns::<T>(&mut r, n, k)?;
            let u = rng::unit_vector::<T>(&mut r, m);
            vs.iter().map(|v| Matrix::outer(&u, v)).collect()
        }
    };
    Tensor3::from_slices(slices)
}

/// Tensor whose TEON-`mode` primal norm is exactly `√K` times its Muon norm:
/// shared left factor for mode 1 (needs `K ≤ n`), shared right factor for
/// mode 2 (needs `K ≤ m`).
pub fn build_max_gain_tensor<T: Real>(m: usize, n: usize, k: usize, mode: Mode, seed: u64) -> Result<Tensor3<T>> {
    match mode {
        Mode::One => rank_one_cone(m, n, k, SharedFactor::Left, seed),
        Mode::Two => rank_one_cone(m, n, k, SharedFactor::Right, seed),
        Mode::Three => Err(TeonError::Contract(
            "maximal-gain construction exists for modes 1 and 2 only".into(),
        )),
    }
}
