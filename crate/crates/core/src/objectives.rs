//! Smooth parts `f` handed to the proximal gradient solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{dims, domain, Result};
use crate::linalg::inf_norm;

/// A differentiable function with gradient, evaluated in one pass.
pub trait SmoothObjective {
    fn dim(&self) -> usize;

    /// Returns `f(x)` and overwrites `grad` with `grad f(x)`.
    fn value_grad(&self, x: &DVector<f64>, grad: &mut DVector<f64>) -> f64;

    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut g = DVector::zeros(self.dim());
        self.value_grad(x, &mut g)
    }

    /// Upper bound on the gradient's Lipschitz constant, if cheaply known.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

/// Linear measurements `b = Ax (+ noise)` with noise level `sigma >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    sigma: f64,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, sigma: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(dims(format!(
                "matrix is {}x{} but right-hand side has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(dims("matrix has no columns"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(domain(format!("noise level must be >= 0, got {sigma}")));
        }
        Ok(LinearSystem { a, b, sigma })
    }

    pub fn noiseless(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::new(a, b, 0.0)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), sigma)
    }

    fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.cols() {
            return Err(dims(format!(
                "vector has length {} but the system has {} unknowns",
                x.len(),
                self.cols()
            )));
        }
        Ok(())
    }

    /// `Ax - b`.
    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_x(x)?;
        Ok(self.residual_unchecked(x))
    }

    pub(crate) fn residual_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut r = self.b.clone();
        r.gemv(1.0, &self.a, x, -1.0);
        r
    }

    /// `(||Ax - b||_2, ||Ax - b||_inf)`.
    pub fn residual_norms(&self, x: &DVector<f64>) -> Result<(f64, f64)> {
        let r = self.residual(x)?;
        Ok((r.norm(), inf_norm(&r)))
    }

    /// Squared spectral norm of `A`.
    pub fn spectral_norm_sq(&self) -> f64 {
        let s = self.a.clone().svd(false, false).singular_values;
        let top = s.max();
        top * top
    }
}

/// `f(x) = 0.5 ||Ax - b||^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    sys: LinearSystem,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(sys: LinearSystem) -> Self {
        let lipschitz = sys.spectral_norm_sq();
        LeastSquares { sys, lipschitz }
    }

    /// `0.5 ||x - a||^2`.
    pub fn distance_to(a: DVector<f64>) -> Self {
        let n = a.len();
        let sys = LinearSystem::noiseless(DMatrix::identity(n, n), a)
            .expect("identity system is well formed");
        LeastSquares {
            sys,
            lipschitz: 1.0,
        }
    }

    pub fn system(&self) -> &LinearSystem {
        &self.sys
    }
}

impl SmoothObjective for LeastSquares {
    fn dim(&self) -> usize {
        self.sys.cols()
    }

    fn value_grad(&self, x: &DVector<f64>, grad: &mut DVector<f64>) -> f64 {
        let r = self.sys.residual_unchecked(x);
        grad.gemv_tr(1.0, &self.sys.a, &r, 0.0);
        0.5 * r.norm_squared()
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Binary-labelled samples for logistic regression. Row `i` of `samples` is
/// the feature vector `a^i`; `outcomes[i]` is `b_i` in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegData {
    samples: DMatrix<f64>,
    outcomes: DVector<f64>,
}

impl LogRegData {
    pub fn new(samples: DMatrix<f64>, outcomes: DVector<f64>) -> Result<Self> {
        if samples.nrows() == 0 {
            return Err(domain("logistic data needs at least one sample"));
        }
        if samples.nrows() != outcomes.len() {
            return Err(dims(format!(
                "{} samples but {} outcomes",
                samples.nrows(),
                outcomes.len()
            )));
        }
        if let Some(bad) = outcomes.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(domain(format!("outcomes must be +1 or -1, found {bad}")));
        }
        Ok(LogRegData { samples, outcomes })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn outcomes(&self) -> &DVector<f64> {
        &self.outcomes
    }

    pub fn num_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.samples.ncols()
    }

    /// Smallest weight for which `w = 0` solves the l1-regularized problem.
    pub fn lambda_max(&self) -> f64 {
        let m = self.num_samples() as f64;
        let s = self.samples.tr_mul(&self.outcomes);
        inf_norm(&s) / (2.0 * m)
    }

    /// Average logistic loss and its gradient.
    pub fn value_grad_checked(&self, w: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        if w.len() != self.num_features() {
            return Err(dims(format!(
                "weight vector has length {} but data has {} features",
                w.len(),
                self.num_features()
            )));
        }
        let mut g = DVector::zeros(w.len());
        let v = self.value_grad(w, &mut g);
        Ok((v, g))
    }

    /// Rescales every feature column to mean zero and unit variance. Constant
    /// columns are only centred.
    pub fn standardize(&mut self) {
        let m = self.num_samples() as f64;
        for mut col in self.samples.column_iter_mut() {
            let mean = col.sum() / m;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / m).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-z})` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothObjective for LogRegData {
    fn dim(&self) -> usize {
        self.num_features()
    }

    fn value_grad(&self, w: &DVector<f64>, grad: &mut DVector<f64>) -> f64 {
        let m = self.num_samples() as f64;
        let scores = &self.samples * w;
        let mut weights = DVector::zeros(scores.len());
        let mut total = 0.0;
        for i in 0..scores.len() {
            let b = self.outcomes[i];
            let z = -b * scores[i];
            total += softplus(z);
            weights[i] = -b * sigmoid(z) / m;
        }
        grad.gemv_tr(1.0, &self.samples, &weights, 0.0);
        total / m
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.samples.norm_squared() / (4.0 * self.num_samples() as f64))
    }
}

/// Average logistic loss `(1/m) sum log(1 + exp(-b_i w^T a^i))` and gradient.
pub fn logistic_value_grad(data: &LogRegData, w: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    data.value_grad_checked(w)
}

/// Smooth part `mu^T (Ax - b) + (rho/2) ||Ax - b||^2` of the equality-constrained
/// augmented Lagrangian.
#[derive(Debug, Clone, Copy)]
pub struct NoiselessAl<'a> {
    pub sys: &'a LinearSystem,
    pub mu: &'a DVector<f64>,
    pub rho: f64,
}

impl NoiselessAl<'_> {
    pub fn check(&self) -> Result<()> {
        if self.mu.len() != self.sys.rows() {
            return Err(dims(format!(
                "multiplier has length {} but the system has {} rows",
                self.mu.len(),
                self.sys.rows()
            )));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(domain(format!("penalty must be > 0, got {}", self.rho)));
        }
        Ok(())
    }
}

impl SmoothObjective for NoiselessAl<'_> {
    fn dim(&self) -> usize {
        self.sys.cols()
    }

    fn value_grad(&self, x: &DVector<f64>, grad: &mut DVector<f64>) -> f64 {
        let r = self.sys.residual_unchecked(x);
        let value = self.mu.dot(&r) + 0.5 * self.rho * r.norm_squared();
        let mut z = self.mu.clone();
        z.axpy(self.rho, &r, 1.0);
        grad.gemv_tr(1.0, &self.sys.a, &z, 0.0);
        value
    }
}

/// Smooth part `(1/(2 rho)) ([mu + rho (||Ax - b||^2 - sigma^2)]_+^2 - mu^2)` of the
/// ball-constrained augmented Lagrangian.
#[derive(Debug, Clone, Copy)]
pub struct NoisyAl<'a> {
    pub sys: &'a LinearSystem,
    pub mu: f64,
    pub rho: f64,
}

impl NoisyAl<'_> {
    pub fn check(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(domain(format!("multiplier must be >= 0, got {}", self.mu)));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(domain(format!("penalty must be > 0, got {}", self.rho)));
        }
        Ok(())
    }
}

impl SmoothObjective for NoisyAl<'_> {
    fn dim(&self) -> usize {
        self.sys.cols()
    }

    fn value_grad(&self, x: &DVector<f64>, grad: &mut DVector<f64>) -> f64 {
        let r = self.sys.residual_unchecked(x);
        let s2 = self.sys.sigma * self.sys.sigma;
        let p = (self.mu + self.rho * (r.norm_squared() - s2)).max(0.0);
        grad.gemv_tr(2.0 * p, &self.sys.a, &r, 0.0);
        (p * p - self.mu * self.mu) / (2.0 * self.rho)
    }
}

/// Value and gradient of the equality-constrained smooth part.
pub fn al_noiseless(
    sys: &LinearSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    rho: f64,
) -> Result<(f64, DVector<f64>)> {
    sys.check_x(x)?;
    let w = NoiselessAl { sys, mu, rho };
    w.check()?;
    let mut g = DVector::zeros(x.len());
    let v = w.value_grad(x, &mut g);
    Ok((v, g))
}

/// Value and gradient of the ball-constrained smooth part.
pub fn al_noisy(
    sys: &LinearSystem,
    x: &DVector<f64>,
    mu: f64,
    rho: f64,
) -> Result<(f64, DVector<f64>)> {
    sys.check_x(x)?;
    let w = NoisyAl { sys, mu, rho };
    w.check()?;
    let mut g = DVector::zeros(x.len());
    let v = w.value_grad(x, &mut g);
    Ok((v, g))
}

/// Relative error `||g - g_fd|| / max(||g||, ||g_fd||)` between the analytic
/// gradient and central differences with step `h`.
pub fn gradient_check<F: SmoothObjective + ?Sized>(f: &F, x: &DVector<f64>, h: f64) -> f64 {
    let n = f.dim();
    let mut g = DVector::zeros(n);
    f.value_grad(x, &mut g);
    let mut fd = DVector::zeros(n);
    let mut probe = x.clone();
    for i in 0..n {
        let xi = probe[i];
        probe[i] = xi + h;
        let up = f.value(&probe);
        probe[i] = xi - h;
        let down = f.value(&probe);
        probe[i] = xi;
        fd[i] = (up - down) / (2.0 * h);
    }
    let scale = g.norm().max(fd.norm());
    if scale == 0.0 {
        0.0
    } else {
        (g - fd).norm() / scale
    }
}
