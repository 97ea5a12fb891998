//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{dims, Error, Result};

/// Relative singular-value cutoff used for rank and null-space decisions.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Minimum-norm least-squares solution of `Ax = b` (the pseudo-inverse solution).
pub fn min_norm_solution(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(dims(format!(
            "matrix has {} rows but right-hand side has length {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rank_tolerance(a.nrows(), a.ncols(), smax);
    svd.solve(b, tol)
        .map_err(|e| Error::Precondition(format!("least-squares solve failed: {e}")))
}

/// Orthonormal basis of the null space of `a`, one basis vector per column.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least n rows so the SVD returns a full n x n right factor
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let smax = svd.singular_values.max();
    let tol = rank_tolerance(m, n, smax).max(f64::MIN_POSITIVE);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

/// Numerical rank of `a`.
pub fn rank(a: &DMatrix<f64>) -> usize {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let tol = rank_tolerance(m, n, sv.max());
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Number of `k`-subsets of an `n`-set, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
