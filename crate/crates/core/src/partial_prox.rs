//! The partial penalty `Phi(x) = lambda * sum_{i=r+1}^n phi(|x|_[i])` and its
//! proximal map.
//!
//! Because `phi` is nondecreasing, `Phi` leaves the `r` largest magnitudes
//! free. Its prox splits into scalar problems: shrink the `n - r` smallest
//! entries of the input with the scalar prox and keep the rest.

use std::cmp::Ordering;

use crate::error::{dims, domain, Result};
use crate::regularizers::Regularizer;

/// `(phi, r, lambda)` defining `Phi(x) = lambda * sum_{i>r} phi(|x|_[i])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialRegularizer {
    phi: Regularizer,
    r: usize,
    lambda: f64,
}

/// Output of [`PartialRegularizer::prox`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProxSelection {
    /// The `r` indices left untouched (largest `|a_i|`), ascending.
    pub kept: Vec<usize>,
    /// The `n - r` indices that were shrunk, ascending.
    pub shrunk: Vec<usize>,
    pub solution: Vec<f64>,
}

impl PartialRegularizer {
    /// `lambda` may be zero (no penalty); it must be finite and nonnegative.
    pub fn new(phi: Regularizer, r: usize, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(domain(format!("penalty weight must be >= 0, got {lambda}")));
        }
        Ok(PartialRegularizer { phi, r, lambda })
    }

    /// Full (r = 0) penalty with unit weight.
    pub fn full(phi: Regularizer) -> Self {
        PartialRegularizer {
            phi,
            r: 0,
            lambda: 1.0,
        }
    }

    pub fn phi(&self) -> &Regularizer {
        &self.phi
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.phi, self.r, lambda)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.r >= n {
            return Err(domain(format!(
                "number of free entries r = {} must be below the dimension n = {n}",
                self.r
            )));
        }
        Ok(())
    }

    /// `Phi(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_unstable_by(|a, b| b.total_cmp(a));
        let tail: f64 = mags[self.r..].iter().map(|&t| self.phi.eval_abs(t)).sum();
        self.lambda * tail
    }

    /// Minimizer of `0.5 ||x - a||^2 + step * Phi(x) / lambda`, i.e. the prox of
    /// the unweighted partial penalty with scale `step`.
    ///
    /// Inside a proximal gradient iteration the caller passes
    /// `step = lambda / L`. A zero step returns `a` unchanged.
    pub fn prox(&self, a: &[f64], step: f64) -> Result<ProxSelection> {
        self.check_dim(a.len())?;
        if !(step.is_finite() && step >= 0.0) {
            return Err(domain(format!("prox step must be >= 0, got {step}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(domain("prox argument has non-finite entries"));
        }
        let mut solution = vec![0.0; a.len()];
        let mut order: Vec<usize> = Vec::with_capacity(a.len());
        self.prox_into(a, step, &mut solution, &mut order);
        let split = a.len() - self.r;
        let mut shrunk = order[..split].to_vec();
        let mut kept = order[split..].to_vec();
        shrunk.sort_unstable();
        kept.sort_unstable();
        Ok(ProxSelection {
            kept,
            shrunk,
            solution,
        })
    }

    /// Writes the prox into `out`. On return the first `n - r` entries of
    /// `order` hold the shrunk indices.
    pub(crate) fn prox_into(&self, a: &[f64], step: f64, out: &mut [f64], order: &mut Vec<usize>) {
        let n = a.len();
        out.copy_from_slice(a);
        select_smallest(a, n - self.r, order);
        if step == 0.0 {
            return;
        }
        for &i in &order[..n - self.r] {
            out[i] = self.phi.prox_unchecked(a[i], step).minimizer;
        }
    }

    /// Objective `0.5 ||x - a||^2 + step * sum_{i>r} phi(|x|_[i])`.
    pub fn prox_objective(&self, a: &[f64], x: &[f64], step: f64) -> Result<f64> {
        if a.len() != x.len() {
            return Err(dims(format!("lengths {} and {}", a.len(), x.len())));
        }
        self.check_dim(a.len())?;
        let unit = PartialRegularizer {
            lambda: 1.0,
            ..*self
        };
        let quad: f64 = a
            .iter()
            .zip(x)
            .map(|(ai, xi)| 0.5 * (xi - ai).powi(2))
            .sum();
        Ok(quad + step * unit.value_unchecked(x))
    }
}

/// Fills `order` with a permutation of `0..n` whose first `count` entries are
/// the indices of the `count` smallest `|a_i|`. Ties in magnitude resolve to
/// the smaller index.
fn select_smallest(a: &[f64], count: usize, order: &mut Vec<usize>) {
    order.clear();
    order.extend(0..a.len());
    if count == 0 || count >= a.len() {
        return;
    }
    let key =
        |i: &usize, j: &usize| -> Ordering { a[*i].abs().total_cmp(&a[*j].abs()).then(i.cmp(j)) };
    order.select_nth_unstable_by(count - 1, key);
}
