//! Dense matrices and order-3 tensors.
//!
//! Matricization uses block concatenation of the frontal slices
//! `X⁽¹⁾ … X⁽ᴷ⁾` of an `m × n × K` tensor:
//!
//! | mode | shape      | layout                         |
//! |------|------------|--------------------------------|
//! | 1    | `m × nK`   | `[X⁽¹⁾ X⁽²⁾ … X⁽ᴷ⁾]`           |
//! | 2    | `n × mK`   | `[X⁽¹⁾ᵀ X⁽²⁾ᵀ … X⁽ᴷ⁾ᵀ]`        |
//! | 3    | `K × mn`   | row `k` is `vec(X⁽ᵏ⁾)`, row-major |
//!
//! Modes 1 and 2 coincide with the usual fiber ordering; mode 3 stores
//! each slice row-major.

mod matrix;
mod svd;
mod tensor;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

pub use matrix::Matrix;
pub use svd::{svd, SvdResult, MAX_SWEEPS};
pub use tensor::{fold, frobenius, inner, matricize, Tensor3};

use crate::error::TeonError;

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Off-diagonal threshold below which a Jacobi column pair counts as
    /// orthogonal.
    const JACOBI_TOL: f64;

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const JACOBI_TOL: f64 = 1e-14;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const JACOBI_TOL: f64 = 1e-6;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Matricization mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    pub fn index(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
            Mode::Three => 3,
        }
    }
}

impl TryFrom<u8> for Mode {
    type Error = TeonError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(TeonError::dim(format!("mode must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl From<Mode> for u8 {
    fn from(mode: Mode) -> u8 {
        mode.index()
    }
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}
