//! Feasible augmented Lagrangian methods for
//! `min Phi(x) s.t. Ax = b` and `min Phi(x) s.t. ||Ax - b|| <= sigma`.
//!
//! Each outer iteration approximately minimizes `w(x; mu, rho) + Phi(x)` with
//! the proximal gradient method to tolerance `eps_k`, updates the multiplier,
//! and grows the penalty when the constraint violation does not contract by
//! `eta`. The subproblem restarts from a known feasible point whenever the
//! current augmented Lagrangian value exceeds the fixed bound `upsilon`, which
//! keeps every iterate inside a bounded level set.

use std::fmt;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::error::{dims, domain, Error, Result};
use crate::linalg::{inf_norm, min_norm_solution};
use crate::npg::{npg_solve, NpgConfig, NpgStatus};
use crate::objectives::{LinearSystem, NoiselessAl, NoisyAl, SmoothObjective};
use crate::partial_prox::PartialRegularizer;

/// Relative slack allowed when checking `L(x) <= upsilon` in floating point.
const UPSILON_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FalConfig {
    /// Starting point; zero when `None`.
    pub x0: Option<DVector<f64>>,
    /// Initial multiplier for equality constraints; zero when `None`.
    pub mu0: Option<DVector<f64>>,
    /// Initial (nonnegative) multiplier for the ball constraint.
    pub mu0_noisy: f64,
    pub rho0: f64,
    pub gamma: f64,
    pub theta: f64,
    pub eta: f64,
    /// Subproblem tolerance of the first outer iteration.
    pub eps0: f64,
    /// `eps_k = max(eps_decay * eps_{k-1}, eps_min)`.
    pub eps_decay: f64,
    pub eps_min: f64,
    /// Stop once `eps_k` is at most this and the iterate is feasible.
    pub eps_target: f64,
    pub feas_tol: f64,
    /// Level bound; the smallest admissible value is used when `None`.
    pub upsilon: Option<f64>,
    pub outer_max: usize,
    pub rho_max: f64,
}

impl Default for FalConfig {
    fn default() -> Self {
        FalConfig {
            x0: None,
            mu0: None,
            mu0_noisy: 0.0,
            rho0: 1.0,
            gamma: 5.0,
            theta: 1e-2,
            eta: 0.25,
            eps0: 1.0,
            eps_decay: 0.1,
            eps_min: 1e-5,
            eps_target: 1e-4,
            feas_tol: 1e-5,
            upsilon: None,
            outer_max: 500,
            rho_max: 1e14,
        }
    }
}

impl FalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.rho0) {
            return Err(domain(format!("rho0 must be positive, got {}", self.rho0)));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(domain(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !positive(self.theta) {
            return Err(domain(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(domain(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(positive(self.eps0) && positive(self.eps_min) && self.eps_min <= self.eps0) {
            return Err(domain("need 0 < eps_min <= eps0"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return Err(domain(format!(
                "eps_decay must lie in (0, 1], got {}",
                self.eps_decay
            )));
        }
        if !positive(self.feas_tol) || !positive(self.eps_target) {
            return Err(domain("tolerances must be positive"));
        }
        if !(self.mu0_noisy >= 0.0 && self.mu0_noisy.is_finite()) {
            return Err(domain("the ball-constraint multiplier must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxOuter,
    /// The penalty parameter exceeded `rho_max`.
    PenaltyOverflow,
    /// A subproblem produced NaN or infinite values.
    NonFinite,
    /// An accepted iterate broke the level bound `L(x) <= upsilon`.
    LevelBoundViolated,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxOuter => "max_outer",
            SolveStatus::PenaltyOverflow => "penalty_overflow",
            SolveStatus::NonFinite => "non_finite",
            SolveStatus::LevelBoundViolated => "level_bound_violated",
        })
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FalRecord {
    pub outer: usize,
    /// Penalty used by this iteration's subproblem.
    pub rho: f64,
    pub eps: f64,
    /// Whether the subproblem started from the feasible point.
    pub restarted: bool,
    /// Augmented Lagrangian value at the accepted iterate.
    pub al_value: f64,
    /// Constraint violation measure after the solve.
    pub violation: f64,
    pub infeasibility: f64,
    pub multiplier_norm: f64,
    pub npg_iterations: usize,
    pub npg_status: NpgStatus,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: DVector<f64>,
    /// `Phi(x)`.
    pub objective: f64,
    /// `||Ax - b||_inf` (noiseless) or `[||Ax - b||_inf - sigma]_+` (noisy).
    pub infeasibility: f64,
    pub residual_norm: f64,
    /// Surrogate stationarity gap of the final subproblem.
    pub gap: f64,
    pub outer_iterations: usize,
    pub npg_iterations: usize,
    pub rho: f64,
    pub upsilon: f64,
    pub status: SolveStatus,
    pub wall_time: Duration,
    pub trace: Vec<FalRecord>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Single-line `key=value` summary.
    pub fn summary_line(&self) -> String {
        format!(
            "status={} objective={:.16e} infeasibility={:.16e} outer={} npg_iters={} wall_s={:.6}",
            self.status,
            self.objective,
            self.infeasibility,
            self.outer_iterations,
            self.npg_iterations,
            self.wall_time.as_secs_f64()
        )
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "outer,rho,eps,restarted,al_value,violation,infeasibility,multiplier_norm,npg_iterations,npg_status,gap"
        )?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
                r.outer,
                r.rho,
                r.eps,
                r.restarted,
                r.al_value,
                r.violation,
                r.infeasibility,
                r.multiplier_norm,
                r.npg_iterations,
                r.npg_status,
                r.gap
            )?;
        }
        Ok(())
    }
}

/// What differs between the equality- and ball-constrained variants.
trait ConstraintModel {
    type Mult: Clone;

    fn sys(&self) -> &LinearSystem;
    fn smooth<'a>(&'a self, mu: &'a Self::Mult, rho: f64) -> Box<dyn SmoothObjective + 'a>;
    fn update_multiplier(&self, mu: &Self::Mult, rho: f64, residual: &DVector<f64>) -> Self::Mult;
    fn multiplier_norm(&self, mu: &Self::Mult) -> f64;
    /// Quantity that must contract by `eta` to keep the penalty.
    fn violation(&self, residual: &DVector<f64>) -> f64;
    /// Termination measure compared against `feas_tol`.
    fn terminal_infeasibility(&self, residual: &DVector<f64>) -> f64;
    fn check_feasible(&self, residual: &DVector<f64>, tol: f64) -> Result<()>;
}

struct Equality<'a> {
    sys: &'a LinearSystem,
}

impl ConstraintModel for Equality<'_> {
    type Mult = DVector<f64>;

    fn sys(&self) -> &LinearSystem {
        self.sys
    }

    fn smooth<'a>(&'a self, mu: &'a DVector<f64>, rho: f64) -> Box<dyn SmoothObjective + 'a> {
        Box::new(NoiselessAl {
            sys: self.sys,
            mu,
            rho,
        })
    }

    fn update_multiplier(
        &self,
        mu: &DVector<f64>,
        rho: f64,
        residual: &DVector<f64>,
    ) -> DVector<f64> {
        mu + rho * residual
    }

    fn multiplier_norm(&self, mu: &DVector<f64>) -> f64 {
        mu.norm()
    }

    fn violation(&self, residual: &DVector<f64>) -> f64 {
        residual.norm()
    }

    fn terminal_infeasibility(&self, residual: &DVector<f64>) -> f64 {
        inf_norm(residual)
    }

    fn check_feasible(&self, residual: &DVector<f64>, tol: f64) -> Result<()> {
        let r = residual.norm();
        if r > tol {
            return Err(Error::Precondition(format!(
                "feasible point has residual {r:e}, above tolerance {tol:e}"
            )));
        }
        Ok(())
    }
}

struct Ball<'a> {
    sys: &'a LinearSystem,
}

impl ConstraintModel for Ball<'_> {
    type Mult = f64;

    fn sys(&self) -> &LinearSystem {
        self.sys
    }

    fn smooth<'a>(&'a self, mu: &'a f64, rho: f64) -> Box<dyn SmoothObjective + 'a> {
        Box::new(NoisyAl {
            sys: self.sys,
            mu: *mu,
            rho,
        })
    }

    fn update_multiplier(&self, mu: &f64, rho: f64, residual: &DVector<f64>) -> f64 {
        let s = self.sys.sigma();
        (mu + rho * (residual.norm_squared() - s * s)).max(0.0)
    }

    fn multiplier_norm(&self, mu: &f64) -> f64 {
        *mu
    }

    fn violation(&self, residual: &DVector<f64>) -> f64 {
        (residual.norm() - self.sys.sigma()).max(0.0)
    }

    fn terminal_infeasibility(&self, residual: &DVector<f64>) -> f64 {
        (inf_norm(residual) - self.sys.sigma()).max(0.0)
    }

    fn check_feasible(&self, residual: &DVector<f64>, tol: f64) -> Result<()> {
        let r = residual.norm();
        if r > self.sys.sigma() + tol {
            return Err(Error::Precondition(format!(
                "feasible point has residual norm {r:e}, above sigma {:e}",
                self.sys.sigma()
            )));
        }
        Ok(())
    }
}

/// Solves `min Phi(x) s.t. Ax = b`.
///
/// `x_feas` must satisfy the constraint; when `None` the minimum-norm
/// least-squares solution is used.
pub fn fal_noiseless(
    sys: &LinearSystem,
    preg: &PartialRegularizer,
    cfg: &FalConfig,
    npg_cfg: &NpgConfig,
    x_feas: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    if sys.sigma() != 0.0 {
        return Err(domain(format!(
            "equality-constrained solver needs sigma = 0, got {}",
            sys.sigma()
        )));
    }
    let mu0 = match &cfg.mu0 {
        Some(mu) if mu.len() != sys.rows() => {
            return Err(dims(format!(
                "initial multiplier has length {} but the system has {} rows",
                mu.len(),
                sys.rows()
            )))
        }
        Some(mu) => mu.clone(),
        None => DVector::zeros(sys.rows()),
    };
    run(&Equality { sys }, mu0, preg, cfg, npg_cfg, x_feas)
}

/// Solves `min Phi(x) s.t. ||Ax - b|| <= sigma`.
pub fn fal_noisy(
    sys: &LinearSystem,
    preg: &PartialRegularizer,
    cfg: &FalConfig,
    npg_cfg: &NpgConfig,
    x_feas: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    if !(sys.sigma() > 0.0) {
        return Err(domain("ball-constrained solver needs sigma > 0"));
    }
    run(&Ball { sys }, cfg.mu0_noisy, preg, cfg, npg_cfg, x_feas)
}

fn run<M: ConstraintModel>(
    model: &M,
    mu0: M::Mult,
    preg: &PartialRegularizer,
    cfg: &FalConfig,
    npg_cfg: &NpgConfig,
    x_feas: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    let start = Instant::now();
    cfg.validate()?;
    npg_cfg.validate()?;
    let sys = model.sys();
    let n = sys.cols();
    preg.check_dim(n)?;

    let x_feas = match x_feas {
        Some(x) if x.len() != n => {
            return Err(dims(format!(
                "feasible point has length {} instead of {n}",
                x.len()
            )))
        }
        Some(x) => x.clone(),
        None => min_norm_solution(sys.a(), sys.b())?,
    };
    model.check_feasible(&sys.residual(&x_feas)?, cfg.feas_tol)?;
    let mut x = match &cfg.x0 {
        Some(x0) if x0.len() != n => {
            return Err(dims(format!(
                "starting point has length {} instead of {n}",
                x0.len()
            )))
        }
        Some(x0) => x0.clone(),
        None => DVector::zeros(n),
    };

    let al_value = |x: &DVector<f64>, mu: &M::Mult, rho: f64| -> f64 {
        model.smooth(mu, rho).value(x) + preg.value_unchecked(x.as_slice())
    };

    let mut mu = mu0;
    let mut rho = cfg.rho0;
    let phi_feas = preg.value_unchecked(x_feas.as_slice());
    let floor = phi_feas.max(al_value(&x, &mu, rho));
    let upsilon = match cfg.upsilon {
        Some(u) if u < floor => {
            return Err(Error::Precondition(format!(
                "level bound {u:e} is below max(Phi(x_feas), L(x0)) = {floor:e}"
            )))
        }
        Some(u) => u,
        None => floor,
    };
    let slack = UPSILON_SLACK * upsilon.abs().max(1.0);

    let npg_cfg = NpgConfig {
        record_trace: false,
        ..npg_cfg.clone()
    };
    let mut eps = cfg.eps0;
    let mut violation = model.violation(&sys.residual_unchecked(&x));
    let mut trace = Vec::new();
    let mut npg_iterations = 0;
    let mut gap = f64::INFINITY;
    let mut status = SolveStatus::MaxOuter;
    let mut outer = 0;

    while outer < cfg.outer_max {
        outer += 1;
        let restarted = al_value(&x, &mu, rho) > upsilon;
        let x_init = if restarted { &x_feas } else { &x };
        let smooth = model.smooth(&mu, rho);
        let sub_cfg = NpgConfig {
            eps,
            ..npg_cfg.clone()
        };
        let out = npg_solve(smooth.as_ref(), preg, &sub_cfg, x_init)?;
        drop(smooth);
        npg_iterations += out.iterations;
        gap = out.gap;
        x = out.x;

        let residual = sys.residual_unchecked(&x);
        let al_new = out.objective;
        let infeasibility = model.terminal_infeasibility(&residual);
        let new_violation = model.violation(&residual);
        let mut record = FalRecord {
            outer,
            rho,
            eps,
            restarted,
            al_value: al_new,
            violation: new_violation,
            infeasibility,
            multiplier_norm: model.multiplier_norm(&mu),
            npg_iterations: out.iterations,
            npg_status: out.status,
            gap,
        };
        if out.status == NpgStatus::NonFinite || !al_new.is_finite() {
            trace.push(record);
            status = SolveStatus::NonFinite;
            break;
        }
        if al_new > upsilon + slack {
            trace.push(record);
            status = SolveStatus::LevelBoundViolated;
            break;
        }
        if infeasibility <= cfg.feas_tol && eps <= cfg.eps_target {
            trace.push(record);
            status = SolveStatus::Converged;
            break;
        }

        mu = model.update_multiplier(&mu, rho, &residual);
        record.multiplier_norm = model.multiplier_norm(&mu);
        trace.push(record);
        if new_violation > cfg.eta * violation {
            rho = (cfg.gamma * rho).max(model.multiplier_norm(&mu).powf(1.0 + cfg.theta));
        }
        violation = new_violation;
        if !(rho <= cfg.rho_max) {
            status = SolveStatus::PenaltyOverflow;
            break;
        }
        eps = (cfg.eps_decay * eps).max(cfg.eps_min);
    }

    let residual = sys.residual_unchecked(&x);
    Ok(SolveResult {
        objective: preg.value_unchecked(x.as_slice()),
        infeasibility: model.terminal_infeasibility(&residual),
        residual_norm: residual.norm(),
        x,
        gap,
        outer_iterations: outer,
        npg_iterations,
        rho,
        upsilon,
        status,
        wall_time: start.elapsed(),
        trace,
    })
}
