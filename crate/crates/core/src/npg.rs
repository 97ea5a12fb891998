//! Nonmonotone proximal gradient method for `min f(x) + Phi(x)` where `f` is
//! smooth and `Phi` is a partial penalty.
//!
//! Each iteration starts from a Barzilai-Borwein curvature estimate, then
//! backtracks `L <- tau * L` until the candidate
//! `x+ = prox_{Phi/L}(x - grad f(x) / L)` decreases the maximum of the last
//! `N + 1` objective values by `(c/2) ||x+ - x||^2`. The run stops once the
//! computable stationarity surrogate
//! `||grad f(x) - grad f(x+) + L (x+ - x)||` drops below `eps`.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};

use nalgebra::DVector;

use crate::error::{dims, domain, Result};
use crate::objectives::SmoothObjective;
use crate::partial_prox::PartialRegularizer;

/// Algorithmic constants of the proximal gradient method.
#[derive(Debug, Clone, PartialEq)]
pub struct NpgConfig {
    pub l_min: f64,
    pub l_max: f64,
    /// Backtracking factor, `> 1`.
    pub tau: f64,
    /// Sufficient-decrease constant.
    pub c: f64,
    /// Nonmonotone window: compare against the last `window + 1` values.
    pub window: usize,
    pub eps: f64,
    pub max_iters: usize,
    /// Hard cap on backtracking steps inside one iteration.
    pub max_backtracks: usize,
    /// Curvature used on the first iteration, clamped to `[l_min, l_max]`.
    pub l_init: f64,
    /// Start from the objective's Lipschitz hint instead of `l_init` when one
    /// is available.
    pub use_lipschitz_hint: bool,
    /// Keep per-iteration records in the returned trace.
    pub record_trace: bool,
}

impl Default for NpgConfig {
    fn default() -> Self {
        NpgConfig {
            l_min: 1e-8,
            l_max: 1e8,
            tau: 2.0,
            c: 1e-4,
            window: 5,
            eps: 1e-5,
            max_iters: 50_000,
            max_backtracks: 100,
            l_init: 1.0,
            use_lipschitz_hint: false,
            record_trace: true,
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_min > 0.0 && self.l_min < self.l_max && self.l_max.is_finite()) {
            return Err(domain(format!(
                "need 0 < l_min < l_max, got {} and {}",
                self.l_min, self.l_max
            )));
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(domain(format!("tau must exceed 1, got {}", self.tau)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(domain(format!("c must be positive, got {}", self.c)));
        }
        if !(self.eps > 0.0) {
            return Err(domain(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.l_init > 0.0 && self.l_init.is_finite()) {
            return Err(domain(format!(
                "l_init must be positive, got {}",
                self.l_init
            )));
        }
        Ok(())
    }

    fn clamp_l(&self, l: f64) -> f64 {
        l.clamp(self.l_min, self.l_max)
    }
}

/// Barzilai-Borwein estimate `<s, y> / ||s||^2` clamped to `[l_min, l_max]`.
/// Falls back to the clamped `l_init` when `s = 0`.
pub fn bb_initial_step(s: &DVector<f64>, y: &DVector<f64>, cfg: &NpgConfig) -> f64 {
    let ss = s.norm_squared();
    if ss == 0.0 {
        return cfg.clamp_l(cfg.l_init);
    }
    let ratio = s.dot(y) / ss;
    if ratio.is_nan() {
        return cfg.l_max;
    }
    cfg.clamp_l(ratio)
}

/// Nonmonotone sufficient-decrease test
/// `f_new <= max(history) - (c/2) step_sq`.
pub fn accept_test(history: &[f64], f_new: f64, c: f64, step_sq: f64) -> bool {
    let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    f_new <= reference - 0.5 * c * step_sq
}

/// `||grad_prev - grad_curr + l_bar (x_curr - x_prev)||`, an upper bound on the
/// distance from zero to the limiting subdifferential of `f + Phi` at `x_curr`.
pub fn stationarity_gap(
    grad_prev: &DVector<f64>,
    grad_curr: &DVector<f64>,
    l_bar: f64,
    x_prev: &DVector<f64>,
    x_curr: &DVector<f64>,
) -> f64 {
    grad_prev
        .iter()
        .zip(grad_curr.iter())
        .zip(x_prev.iter().zip(x_curr.iter()))
        .map(|((gp, gc), (xp, xc))| {
            let v = gp - gc + l_bar * (xc - xp);
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpgStatus {
    Converged,
    MaxIters,
    /// Backtracking hit `max_backtracks` without passing the descent test.
    BacktrackLimit,
    /// The objective or its gradient became NaN or infinite.
    NonFinite,
}

impl fmt::Display for NpgStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NpgStatus::Converged => "converged",
            NpgStatus::MaxIters => "max_iters",
            NpgStatus::BacktrackLimit => "backtrack_limit",
            NpgStatus::NonFinite => "non_finite",
        })
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpgRecord {
    pub iter: usize,
    /// Objective `f + Phi` at the accepted point.
    pub objective: f64,
    /// Curvature `L` that passed the descent test.
    pub l_bar: f64,
    /// `||x+ - x||^2`.
    pub step_sq: f64,
    pub gap: f64,
    pub backtracks: usize,
}

impl NpgRecord {
    pub fn step_norm(&self) -> f64 {
        self.step_sq.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpgTrace {
    /// Objective at the starting point.
    pub initial_objective: f64,
    pub window: usize,
    pub records: Vec<NpgRecord>,
}

impl NpgTrace {
    /// Objective values `F(x^0), F(x^1), ...`.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective)
            .chain(self.records.iter().map(|r| r.objective))
            .collect()
    }

    /// Re-runs the descent test on every recorded step, given constant `c`.
    /// Returns the first iteration that fails it.
    pub fn first_descent_violation(&self, c: f64) -> Option<usize> {
        let values = self.objectives();
        self.records.iter().enumerate().find_map(|(k, rec)| {
            let lo = k.saturating_sub(self.window);
            (!accept_test(&values[lo..=k], rec.objective, c, rec.step_sq)).then_some(rec.iter)
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iter,F,L_bar,step_norm,gap")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.iter,
                r.objective,
                r.l_bar,
                r.step_norm(),
                r.gap
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NpgOutcome {
    pub x: DVector<f64>,
    /// `f(x) + Phi(x)` at the returned point.
    pub objective: f64,
    /// Surrogate stationarity gap of the last accepted step (infinite if no
    /// step was taken).
    pub gap: f64,
    pub iterations: usize,
    pub backtracks: usize,
    pub status: NpgStatus,
    pub trace: NpgTrace,
}

/// Runs the nonmonotone proximal gradient method from `x0`.
pub fn npg_solve<F: SmoothObjective + ?Sized>(
    f: &F,
    preg: &PartialRegularizer,
    cfg: &NpgConfig,
    x0: &DVector<f64>,
) -> Result<NpgOutcome> {
    cfg.validate()?;
    let n = x0.len();
    if f.dim() != n {
        return Err(dims(format!(
            "objective has dimension {} but the starting point has length {n}",
            f.dim()
        )));
    }
    preg.check_dim(n)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(domain("starting point has non-finite entries"));
    }

    let lambda = preg.lambda();
    let mut x = x0.clone();
    let mut g = DVector::zeros(n);
    let fx = f.value_grad(&x, &mut g);
    let mut objective = fx + preg.value_unchecked(x.as_slice());
    let mut trace = NpgTrace {
        initial_objective: objective,
        window: cfg.window,
        records: Vec::new(),
    };
    let finish = |x, objective, gap, iterations, backtracks, status, trace| NpgOutcome {
        x,
        objective,
        gap,
        iterations,
        backtracks,
        status,
        trace,
    };
    if !objective.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Ok(finish(
            x,
            objective,
            f64::INFINITY,
            0,
            0,
            NpgStatus::NonFinite,
            trace,
        ));
    }

    let mut history: VecDeque<f64> = VecDeque::with_capacity(cfg.window + 1);
    history.push_back(objective);
    let mut reference = objective;

    let mut x_new = DVector::zeros(n);
    let mut g_new = DVector::zeros(n);
    let mut point = DVector::zeros(n);
    let mut s = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    let mut order = Vec::with_capacity(n);
    let shrunk = n - preg.r();

    let mut l = match (cfg.use_lipschitz_hint, f.lipschitz_hint()) {
        (true, Some(h)) if h > 0.0 => cfg.clamp_l(h),
        _ => cfg.clamp_l(cfg.l_init),
    };
    let mut total_backtracks = 0;
    let mut gap = f64::INFINITY;

    for k in 0..cfg.max_iters {
        if k > 0 {
            l = bb_initial_step(&s, &y, cfg);
        }
        let mut backtracks = 0;
        let (objective_new, step_sq) = loop {
            point.copy_from(&x);
            point.axpy(-1.0 / l, &g, 1.0);
            preg.prox_into(
                point.as_slice(),
                lambda / l,
                x_new.as_mut_slice(),
                &mut order,
            );
            let f_new = f.value_grad(&x_new, &mut g_new);
            // kept entries dominate the shrunk ones in magnitude, so the
            // penalty only sees the shrunk set
            let penalty: f64 = if lambda == 0.0 {
                0.0
            } else {
                lambda
                    * order[..shrunk]
                        .iter()
                        .map(|&i| preg.phi().eval_abs(x_new[i].abs()))
                        .sum::<f64>()
            };
            let candidate = f_new + penalty;
            let step_sq = (&x_new - &x).norm_squared();
            if candidate.is_finite() && candidate <= reference - 0.5 * cfg.c * step_sq {
                break (candidate, step_sq);
            }
            if backtracks == cfg.max_backtracks {
                let status = if candidate.is_finite() {
                    NpgStatus::BacktrackLimit
                } else {
                    NpgStatus::NonFinite
                };
                return Ok(finish(
                    x,
                    objective,
                    gap,
                    k,
                    total_backtracks + backtracks,
                    status,
                    trace,
                ));
            }
            l *= cfg.tau;
            backtracks += 1;
        };
        total_backtracks += backtracks;
        if g_new.iter().any(|v| !v.is_finite()) {
            return Ok(finish(
                x_new,
                objective_new,
                gap,
                k + 1,
                total_backtracks,
                NpgStatus::NonFinite,
                trace,
            ));
        }

        gap = stationarity_gap(&g, &g_new, l, &x, &x_new);
        if cfg.record_trace {
            trace.records.push(NpgRecord {
                iter: k + 1,
                objective: objective_new,
                l_bar: l,
                step_sq,
                gap,
                backtracks,
            });
        }

        s.copy_from(&x_new);
        s -= &x;
        y.copy_from(&g_new);
        y -= &g;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        objective = objective_new;

        if history.len() == cfg.window + 1 {
            history.pop_front();
        }
        history.push_back(objective);
        reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        if gap <= cfg.eps {
            return Ok(finish(
                x,
                objective,
                gap,
                k + 1,
                total_backtracks,
                NpgStatus::Converged,
                trace,
            ));
        }
    }
    let iters = cfg.max_iters;
    Ok(finish(
        x,
        objective,
        gap,
        iters,
        total_backtracks,
        NpgStatus::MaxIters,
        trace,
    ))
}
