//! Uniform lower bound on the nonzero magnitudes of local minimizers.
//!
//! For every column subset `I` with `A_I` of full column rank and
//! `A_I^T b != 0`, take the least-squares coefficients on `I` and their
//! smallest nonzero magnitude. The bound is the minimum of these over all
//! admissible `I`. Local minimizers with concave `phi` are either `r`-sparse
//! or have all nonzero magnitudes at least this large.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{dims, Error, Result};
use crate::linalg::rank_tolerance;

/// Largest column count enumerated by default (`2^14 - 1` subsets).
pub const DEFAULT_MAX_COLUMNS: usize = 14;

/// Coefficients below this fraction of the subset's largest coefficient are
/// treated as zero.
const COEFF_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaBound {
    /// `+inf` when no subset is admissible.
    pub value: f64,
    /// Subset attaining the minimum.
    pub witness: Option<Vec<usize>>,
    /// Number of admissible subsets.
    pub admissible: usize,
}

pub fn delta_lower_bound(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DeltaBound> {
    delta_lower_bound_with_cap(a, b, DEFAULT_MAX_COLUMNS)
}

pub fn delta_lower_bound_with_cap(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    max_columns: usize,
) -> Result<DeltaBound> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(dims(format!(
            "matrix has {} rows but right-hand side has length {}",
            a.nrows(),
            b.len()
        )));
    }
    if n > max_columns {
        return Err(Error::CapExceeded {
            what: "columns for subset enumeration",
            needed: n as u128,
            cap: max_columns as u128,
        });
    }
    let scale = a.norm() * b.norm();
    let per_subset = (1u64..(1u64 << n))
        .into_par_iter()
        .filter_map(|mask| {
            let cols: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            subset_delta(a, b, &cols, scale).map(|d| (d, mask))
        })
        .collect::<Vec<_>>();
    let admissible = per_subset.len();
    // masks come out in order, so the first minimum is the smallest mask
    let best = per_subset
        .into_iter()
        .reduce(|x, y| if y.0 < x.0 { y } else { x });
    Ok(match best {
        Some((value, mask)) => DeltaBound {
            value,
            witness: Some((0..n).filter(|&i| mask >> i & 1 == 1).collect()),
            admissible,
        },
        None => DeltaBound {
            value: f64::INFINITY,
            witness: None,
            admissible,
        },
    })
}

/// Smallest nonzero least-squares coefficient on `cols`, or `None` if the
/// subset is not admissible.
fn subset_delta(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize], scale: f64) -> Option<f64> {
    let sub = a.select_columns(cols);
    let atb = sub.tr_mul(b);
    if atb.amax() <= COEFF_ZERO_TOL * scale {
        return None;
    }
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rank_tolerance(a.nrows(), cols.len(), smax);
    if svd.singular_values.iter().any(|&s| s <= tol) || cols.len() > a.nrows() {
        return None;
    }
    let coef = svd.solve(b, tol).ok()?;
    let top = coef.amax();
    coef.iter()
        .map(|c| c.abs())
        .filter(|&c| c > COEFF_ZERO_TOL * top)
        .min_by(f64::total_cmp)
}
