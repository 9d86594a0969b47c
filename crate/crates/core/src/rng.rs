//! Seeded random sources shared by constructions, tasks and samplers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{Matrix, Real, Tensor3};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<T: Real>(rng: &mut Rng) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::of(x)
}

pub fn gaussian_matrix<T: Real>(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_tensor<T: Real>(rng: &mut Rng, m: usize, n: usize, k: usize) -> Tensor3<T> {
    let slices = (0..k).map(|_| gaussian_matrix(rng, m, n)).collect();
    Tensor3::from_slices(slices).expect("slices share a shape")
}

/// Unit vector drawn uniformly from the sphere.
pub fn unit_vector<T: Real>(rng: &mut Rng, len: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..len).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::of(1e-12) {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
