//! TEON: tensorized cross-layer gradient orthogonalization.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense matrices, order-3 tensors, matricization/folding and a
//!   one-sided Jacobi SVD used as the ground-truth oracle.
//! - [`ortho`]: the polar factor `Ortho(M) = U Vᵀ`, exactly or through
//!   Newton–Schulz coefficient schedules.
//! - [`norms`]: Muon/TEON norms and their duals, steepest-descent steps,
//!   smoothness-ratio estimation, bound evaluators and the rank-one
//!   maximal-gain constructions.
//! - [`optim`]: the TEON, Muon and AdamW update rules with layer grouping.
//! - [`diagnostics`]: top singular vector alignment and stable rank.
//! - [`harness`]: synthetic objectives, training loops, config parsing and
//!   CSV persistence behind the `teon` binary.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod norms;
pub mod optim;
pub mod ortho;
pub mod rng;

pub use error::{Result, TeonError};
pub use linalg::{Matrix, Mode, Real, SvdResult, Tensor3};
pub use ortho::{NsSchedule, OrthoScheme};
