//! Restricted isometry constants by exhaustive support enumeration.

use std::cmp::Ordering;

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::linalg::binomial;

/// Default limit on the number of supports examined.
pub const DEFAULT_SUBSET_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RicResult {
    pub order: usize,
    pub delta: f64,
    /// Support whose Gram matrix attains the extreme eigenvalue.
    pub witness: Vec<usize>,
}

/// Exact `delta_k` of `a`: the largest of `lambda_max(A_S^T A_S) - 1` and
/// `1 - lambda_min(A_S^T A_S)` over all supports `|S| = k`.
pub fn ric_exact(a: &DMatrix<f64>, k: usize) -> Result<RicResult> {
    ric_exact_with_cap(a, k, DEFAULT_SUBSET_CAP)
}

/// Restricted isometry constant of a possibly fractional order, rounded up.
pub fn ric_fractional(a: &DMatrix<f64>, order: f64) -> Result<RicResult> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(domain(format!("order must be positive, got {order}")));
    }
    ric_exact(a, order.ceil() as usize)
}

pub fn ric_exact_with_cap(a: &DMatrix<f64>, k: usize, cap: u128) -> Result<RicResult> {
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(domain(format!("order must lie in 1..={n}, got {k}")));
    }
    let needed = binomial(n, k);
    if needed > cap {
        return Err(Error::CapExceeded {
            what: "supports",
            needed,
            cap,
        });
    }
    let best = (0..n)
        .combinations(k)
        .par_bridge()
        .map(|support| (support_deviation(a, &support), support))
        .reduce_with(pick_worse)
        .expect("at least one support");
    Ok(RicResult {
        order: k,
        delta: best.0,
        witness: best.1,
    })
}

/// Larger deviation wins; equal deviations go to the lexicographically
/// smaller support so the result does not depend on scheduling.
fn pick_worse(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

fn support_deviation(a: &DMatrix<f64>, support: &[usize]) -> f64 {
    let sub = a.select_columns(support);
    let gram = sub.tr_mul(&sub);
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let hi = eig.max();
    let lo = eig.min();
    (hi - 1.0).max(1.0 - lo).max(0.0)
}
