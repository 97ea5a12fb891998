//! Restricted-isometry sufficient conditions for recovery with `phi = |t|^q`,
//! and error bounds for the partial l1 model under noise.

use nalgebra::DVector;

use crate::error::{domain, Result};

/// Whether recovery is local (strict local minimizer) or global (unique
/// global minimizer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryScope {
    /// Order `K - floor(r/2)`.
    Local,
    /// Order `K + floor(r/2)`.
    Global,
}

/// Which form of the RIP condition to test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RipBranch {
    /// `delta_k < 1/3`.
    OneThird,
    /// `delta_{gamma k} < 1 / sqrt((gamma - 1)^{1 - 2/q} + 1)`.
    Gamma(f64),
}

/// A sufficient condition for recovering a `K`-sparse solution with the
/// partial `|t|^q` penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipCondition {
    scope: RecoveryScope,
    sparsity: usize,
    r: usize,
    q: f64,
    branch: RipBranch,
}

impl RipCondition {
    pub fn new(
        scope: RecoveryScope,
        sparsity: usize,
        r: usize,
        q: f64,
        branch: RipBranch,
    ) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(domain(format!("q must lie in (0, 1], got {q}")));
        }
        if r > sparsity {
            return Err(domain(format!("need r <= K, got r = {r}, K = {sparsity}")));
        }
        if let RipBranch::Gamma(g) = branch {
            if !(g > 1.0 && g.is_finite()) {
                return Err(domain(format!("gamma must exceed 1, got {g}")));
            }
        }
        Ok(RipCondition {
            scope,
            sparsity,
            r,
            q,
            branch,
        })
    }

    /// Base order `K -+ floor(r/2)` before any `gamma` scaling.
    pub fn base_order(&self) -> usize {
        match self.scope {
            RecoveryScope::Local => self.sparsity - self.r / 2,
            RecoveryScope::Global => self.sparsity + self.r / 2,
        }
    }

    /// RIC order to compute; fractional orders are rounded up by the caller.
    pub fn order(&self) -> f64 {
        let k = self.base_order() as f64;
        match self.branch {
            RipBranch::OneThird => k,
            RipBranch::Gamma(g) => g * k,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self.branch {
            RipBranch::OneThird => 1.0 / 3.0,
            RipBranch::Gamma(g) => gamma_threshold(self.q, g),
        }
    }

    pub fn holds(&self, delta: f64) -> bool {
        delta < self.threshold()
    }
}

/// `1 / sqrt((gamma - 1)^{1 - 2/q} + 1)`.
pub fn gamma_threshold(q: f64, gamma: f64) -> f64 {
    1.0 / ((gamma - 1.0).powf(1.0 - 2.0 / q) + 1.0).sqrt()
}

/// Evaluates the RIP sufficient condition for the given RIC value.
pub fn rip_condition(
    delta: f64,
    scope: RecoveryScope,
    sparsity: usize,
    r: usize,
    q: f64,
    branch: RipBranch,
) -> Result<bool> {
    Ok(RipCondition::new(scope, sparsity, r, q, branch)?.holds(delta))
}

/// Bound on `||x~ - x*||` where `x*` globally solves the partial l1 model
/// with noise level `sigma` and `x~` satisfies `||A x~ - b|| <= sigma`.
///
/// `delta` is the RIC of order `k + ceil(r/2)` (scaled by `gamma` for the
/// second branch). The guarantee is stated for `k >= 2` and `k + r <= n - 1`.
pub fn stable_error_bound(
    delta: f64,
    sigma: f64,
    k: usize,
    r: usize,
    x_tilde: &DVector<f64>,
    branch: RipBranch,
) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(delta >= 0.0) {
        return Err(domain(format!("delta must be >= 0, got {delta}")));
    }
    if k == 0 || k + r >= x_tilde.len() {
        return Err(domain(format!(
            "need k >= 1 and k + r <= n - 1, got k = {k}, r = {r}, n = {}",
            x_tilde.len()
        )));
    }
    let order = (k + r.div_ceil(2)) as f64;
    let tail = tail_l1(x_tilde, k) / order.sqrt();
    let noise = 2.0 * (2.0 * (1.0 + delta)).sqrt() * sigma;
    match branch {
        RipBranch::OneThird => {
            if delta >= 1.0 / 3.0 {
                return Err(domain(format!("branch needs delta < 1/3, got {delta}")));
            }
            let d = 1.0 - 3.0 * delta;
            let coef = 2.0 * 2f64.sqrt() * (2.0 * delta + (d * delta).sqrt()) / d;
            Ok(noise / d + coef * tail)
        }
        RipBranch::Gamma(g) => {
            if !(g > 1.0 && g.is_finite()) {
                return Err(domain(format!("gamma must exceed 1, got {g}")));
            }
            let limit = ((g - 1.0) / g).sqrt();
            if delta >= limit {
                return Err(domain(format!(
                    "branch needs delta < sqrt((gamma-1)/gamma) = {limit}, got {delta}"
                )));
            }
            let gap = limit - delta;
            let first = noise / (1.0 - delta / limit);
            let coef = (2f64.sqrt() * delta + (g * gap * delta).sqrt()) / (g * gap) + 1.0;
            Ok(first + coef * 2.0 * tail)
        }
    }
}

/// `||x_{-max(k)}||_1`: l1 mass outside the `k` largest magnitudes.
pub fn tail_l1(x: &DVector<f64>, k: usize) -> f64 {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    mags.iter().skip(k).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_third_branch() {
        for (k, r) in [(3, 0), (5, 2), (4, 4)] {
            assert!(
                rip_condition(0.2, RecoveryScope::Local, k, r, 1.0, RipBranch::OneThird).unwrap()
            );
            assert!(
                !rip_condition(0.34, RecoveryScope::Global, k, r, 1.0, RipBranch::OneThird)
                    .unwrap()
            );
        }
    }

    #[test]
    fn gamma_thresholds() {
        let c = RipCondition::new(RecoveryScope::Local, 4, 2, 1.0, RipBranch::Gamma(2.0)).unwrap();
        assert!((c.threshold() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((gamma_threshold(0.5, 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
        // q = 1/2, gamma = 3: 2^{-3} + 1
        assert!((gamma_threshold(0.5, 3.0) - 1.0 / 1.125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn orders_follow_scope() {
        let local =
            RipCondition::new(RecoveryScope::Local, 6, 3, 0.5, RipBranch::OneThird).unwrap();
        assert_eq!(local.order(), 5.0);
        let global =
            RipCondition::new(RecoveryScope::Global, 6, 3, 0.5, RipBranch::Gamma(1.5)).unwrap();
        assert_eq!(global.base_order(), 7);
        assert_eq!(global.order(), 10.5);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(RipCondition::new(RecoveryScope::Local, 3, 1, 1.5, RipBranch::OneThird).is_err());
        assert!(RipCondition::new(RecoveryScope::Local, 3, 1, 0.5, RipBranch::Gamma(1.0)).is_err());
        assert!(RipCondition::new(RecoveryScope::Local, 3, 4, 0.5, RipBranch::OneThird).is_err());
    }

    #[test]
    fn bound_examples() {
        let x = DVector::from_vec(vec![0.0, 2.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(
            stable_error_bound(0.0, 0.0, 2, 1, &x, RipBranch::OneThird).unwrap(),
            0.0
        );
        let b = stable_error_bound(0.2, 1.0, 2, 1, &x, RipBranch::OneThird).unwrap();
        assert!((b - 2.0 * 2.4f64.sqrt() / 0.4).abs() < 1e-12);
        assert!((b - 7.745_966_692_414_834).abs() < 1e-12);
        assert!(stable_error_bound(0.34, 1.0, 2, 1, &x, RipBranch::OneThird).is_err());
        // gamma = 2: limit sqrt(1/2)
        let g = stable_error_bound(0.1, 1.0, 2, 1, &x, RipBranch::Gamma(2.0)).unwrap();
        let expect = 2.0 * 2.2f64.sqrt() / (1.0 - 0.1 * 2f64.sqrt());
        assert!((g - expect).abs() < 1e-12);
        assert!(stable_error_bound(0.75, 1.0, 2, 1, &x, RipBranch::Gamma(2.0)).is_err());
    }

    #[test]
    fn tail_term_uses_ceiling_order() {
        let x = DVector::from_vec(vec![5.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        // k = 2, r = 3: tail 1 over sqrt(2 + 2)
        let b = stable_error_bound(0.0, 0.0, 2, 3, &x, RipBranch::OneThird).unwrap();
        assert_eq!(b, 0.0);
        let b = stable_error_bound(0.1, 0.0, 2, 3, &x, RipBranch::OneThird).unwrap();
        let coef = 2.0 * 2f64.sqrt() * (0.2 + (0.7f64 * 0.1).sqrt()) / 0.7;
        assert!((b - coef * 1.0 / 2.0).abs() < 1e-12);
        assert_eq!(tail_l1(&x, 2), 1.0);
    }
}
