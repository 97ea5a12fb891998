//! Recovery and sparsity metrics.

use nalgebra::DVector;

use crate::error::{HarnessError, Result};

/// Recovery counts as a success when the estimate is this close in l2.
pub const SUCCESS_TOL: f64 = 1e-3;

/// Entries at or below this magnitude count as zero.
pub const CARDINALITY_TOL: f64 = 1e-6;

fn same_len(x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
    if x.len() != y.len() {
        return Err(HarnessError::Domain(format!(
            "vectors have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

pub fn success(x_true: &DVector<f64>, x_hat: &DVector<f64>) -> Result<bool> {
    same_len(x_true, x_hat)?;
    Ok((x_true - x_hat).norm() < SUCCESS_TOL)
}

pub fn rel_err(x_true: &DVector<f64>, x_hat: &DVector<f64>) -> Result<f64> {
    same_len(x_true, x_hat)?;
    let scale = x_true.norm();
    if scale == 0.0 {
        return Err(HarnessError::Domain(
            "relative error of a zero reference".into(),
        ));
    }
    Ok((x_hat - x_true).norm() / scale)
}

pub fn cardinality(x: &DVector<f64>) -> usize {
    x.iter().filter(|v| v.abs() > CARDINALITY_TOL).count()
}

/// `ceil(0.1 K), ceil(0.2 K), ..., ceil(0.9 K), K` without duplicates.
/// Empty for `K = 0`.
pub fn r_schedule(k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = (1..=9).map(|j| (j * k).div_ceil(10)).collect();
    out.push(k);
    out.dedup();
    out
}
