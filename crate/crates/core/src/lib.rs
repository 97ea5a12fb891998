//! Sparse recovery with partial regularization.
//!
//! The models handled here penalize only the `n - r` smallest entries (in
//! magnitude) of the unknown:
//!
//! ```text
//! min  sum_{i=r+1}^n phi(|x|_[i])   s.t.  ||Ax - b|| <= sigma
//! ```
//!
//! where `|x|_[i]` is the i-th largest magnitude of `x`. Leaving the `r`
//! leading entries free removes the shrinkage bias that a full penalty puts
//! on large coefficients.
//!
//! Layout:
//! - [`regularizers`]: the scalar penalties `phi` and their exact scalar prox.
//! - [`partial_prox`]: the partial penalty `Phi` and its prox by order selection.
//! - [`objectives`]: smooth terms (least squares, logistic loss, augmented Lagrangians).
//! - [`npg`]: nonmonotone proximal gradient for `f(x) + Phi(x)`.
//! - [`fal`]: feasible augmented Lagrangian drivers for the constrained models.
//! - [`analysis`]: restricted isometry constants, null space property falsifiers,
//!   sparsity lower bound and stable-recovery error bounds.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fal;
pub mod linalg;
pub mod npg;
pub mod objectives;
pub mod partial_prox;
pub mod regularizers;

pub use error::{Error, Result};
pub use fal::{fal_noiseless, fal_noisy, FalConfig, SolveResult, SolveStatus};
pub use npg::{npg_solve, NpgConfig, NpgOutcome, NpgStatus, NpgTrace};
pub use objectives::{LinearSystem, LogRegData, SmoothObjective};
pub use partial_prox::{PartialRegularizer, ProxSelection};
pub use regularizers::{Regularizer, RegularizerKind, ScalarProx};
