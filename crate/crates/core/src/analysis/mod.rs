//! Desk-scale checks of recovery conditions: exact restricted isometry
//! constants, the magnitude lower bound for nonzero entries of local
//! minimizers, null space property falsifiers, RIP sufficient conditions and
//! stable-recovery error bounds.
//!
//! Everything here enumerates subsets, so it is only meant for small `n`.

pub mod conditions;
pub mod delta;
pub mod nsp;
pub mod ric;

pub use conditions::{
    gamma_threshold, rip_condition, stable_error_bound, RecoveryScope, RipBranch, RipCondition,
};
pub use delta::{delta_lower_bound, DeltaBound};
pub use nsp::{gnsp_falsify, lnsp_falsify, NspKind, NspStatus, NspVerdict};
pub use ric::{ric_exact, ric_exact_with_cap, ric_fractional, RicResult};
