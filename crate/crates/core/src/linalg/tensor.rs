use super::matrix::{dot, Matrix};
use super::{Mode, Real};
use crate::error::{Result, TeonError};

/// Order-3 tensor `m × n × K` stored as `K` frontal slices of shape `m × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T = f64> {
    m: usize,
    n: usize,
    slices: Vec<Matrix<T>>,
}

impl<T: Real> Tensor3<T> {
    pub fn from_slices(slices: Vec<Matrix<T>>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| TeonError::dim("a tensor needs at least one slice"))?;
        let (m, n) = first.shape();
        if let Some((k, bad)) = slices.iter().enumerate().find(|(_, s)| s.shape() != (m, n)) {
            return Err(TeonError::dim(format!(
                "slice {k} has shape {:?}, expected {m}x{n}",
                bad.shape()
            )));
        }
        Ok(Self { m, n, slices })
    }

    pub fn zeros(m: usize, n: usize, k: usize) -> Self {
        assert!(k > 0, "a tensor needs at least one slice");
        Self {
            m,
            n,
            slices: vec![Matrix::zeros(m, n); k],
        }
    }

    /// Shape `(m, n, K)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.slices.len())
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.slices.len()
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &Matrix<T> {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[Matrix<T>] {
        &self.slices
    }

    pub(crate) fn slices_mut(&mut self) -> &mut [Matrix<T>] {
        &mut self.slices
    }

    pub fn into_slices(self) -> Vec<Matrix<T>> {
        self.slices
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.slices[k].get(i, j)
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(Matrix::is_zero)
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(Matrix::is_finite)
    }

    pub fn map(&self, f: impl Fn(T) -> T + Copy) -> Self {
        Self {
            m: self.m,
            n: self.n,
            slices: self.slices.iter().map(|s| s.map(f)).collect(),
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(move |x| alpha * x)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.add(b)).collect();
        Self { m: self.m, n: self.n, slices }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.sub(b)).collect();
        Self { m: self.m, n: self.n, slices }
    }

    pub fn matricize(&self, mode: Mode) -> Matrix<T> {
        matricize(self, mode)
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        inner(self, other)
    }

    pub fn frobenius(&self) -> T {
        frobenius(self)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.assert_same_shape(other);
        self.slices
            .iter()
            .zip(&other.slices)
            .fold(T::zero(), |acc, (a, b)| acc.max(a.max_abs_diff(b)))
    }

    fn assert_same_shape(&self, other: &Self) {
        assert!(
            self.shape() == other.shape(),
            "tensor shape mismatch: {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
    }
}

/// Mode-`i` unfolding; see the module docs for the column layout.
pub fn matricize<T: Real>(t: &Tensor3<T>, mode: Mode) -> Matrix<T> {
    let (m, n, k) = t.shape();
    match mode {
        Mode::One => {
            let mut data = Vec::with_capacity(m * n * k);
            for i in 0..m {
                for s in &t.slices {
                    data.extend_from_slice(s.row(i));
                }
            }
            Matrix::from_raw(m, n * k, data)
        }
        Mode::Two => {
            let mut data = Vec::with_capacity(m * n * k);
            for j in 0..n {
                for s in &t.slices {
                    data.extend((0..m).map(|i| s.get(i, j)));
                }
            }
            Matrix::from_raw(n, m * k, data)
        }
        Mode::Three => {
            let mut data = Vec::with_capacity(m * n * k);
            for s in &t.slices {
                data.extend_from_slice(s.as_slice());
            }
            Matrix::from_raw(k, m * n, data)
        }
    }
}

/// Inverse of [`matricize`] for a tensor of shape `(m, n, k)`.
pub fn fold<T: Real>(x: &Matrix<T>, mode: Mode, shape: (usize, usize, usize)) -> Result<Tensor3<T>> {
    let (m, n, k) = shape;
    if m == 0 || n == 0 || k == 0 {
        return Err(TeonError::dim(format!("tensor shape {shape:?} is empty")));
    }
    let expected = match mode {
        Mode::One => (m, n * k),
        Mode::Two => (n, m * k),
        Mode::Three => (k, m * n),
    };
    if x.shape() != expected {
        return Err(TeonError::dim(format!(
            "mode-{mode} fold to {shape:?} needs a {}x{} matrix, got {}x{}",
            expected.0,
            expected.1,
            x.rows(),
            x.cols()
        )));
    }
    let src = x.as_slice();
    let slices = match mode {
        Mode::One => (0..k)
            .map(|s| {
                let mut data = Vec::with_capacity(m * n);
                for i in 0..m {
                    let row = &src[i * n * k..(i + 1) * n * k];
                    data.extend_from_slice(&row[s * n..(s + 1) * n]);
                }
                Matrix::from_raw(m, n, data)
            })
            .collect(),
        Mode::Two => (0..k)
            .map(|s| Matrix::from_fn(m, n, |i, j| src[j * m * k + s * m + i]))
            .collect(),
        Mode::Three => (0..k)
            .map(|s| Matrix::from_raw(m, n, src[s * m * n..(s + 1) * m * n].to_vec()))
            .collect(),
    };
    Ok(Tensor3 { m, n, slices })
}

/// Sum of elementwise products over all index triples.
pub fn inner<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(TeonError::dim(format!(
            "inner product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.slices
        .iter()
        .zip(&b.slices)
        .map(|(x, y)| dot(x.as_slice(), y.as_slice()))
        .sum())
}

pub fn frobenius<T: Real>(t: &Tensor3<T>) -> T {
    t.slices.iter().map(Matrix::frobenius_sq).sum::<T>().sqrt()
}
