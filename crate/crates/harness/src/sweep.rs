//! Compressed-sensing and logistic-regression sweeps.
//!
//! Instances run on the rayon pool; each solver call stays on one thread and
//! records are returned in `(K, instance, model)` order whatever the pool size.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use partialreg_core::{
    fal_noiseless, fal_noisy, npg_solve, FalConfig, LogRegData, NpgConfig, PartialRegularizer,
    Regularizer, SmoothObjective,
};
use rayon::prelude::*;

use crate::cputime::measure;
use crate::error::{HarnessError, Result};
use crate::instances::{gen_cs_instance, gen_logreg_instance, CsInstance, CsInstanceSpec};
use crate::metrics::{cardinality, r_schedule, rel_err, success};
use crate::record::{Experiment, ExperimentRecord, ModelId};
use crate::rng::sweep_stream;

#[derive(Debug, Clone, PartialEq)]
pub struct CsSweep {
    pub m: usize,
    pub n: usize,
    pub ks: Vec<usize>,
    pub instances: usize,
    /// Zero solves the equality-constrained model, positive the ball-constrained one.
    pub noise_std: f64,
    pub seed: u64,
    /// Penalties solved as full models (`r = 0`).
    pub full: Vec<Regularizer>,
    /// Penalties solved as partial models over the `r` schedule of each `K`.
    pub partial: Vec<Regularizer>,
    pub fal: FalConfig,
    pub npg: NpgConfig,
}

impl CsSweep {
    /// `m x n` noiseless sweep with the l1 penalty and default solver settings.
    pub fn l1(m: usize, n: usize, ks: Vec<usize>, instances: usize, seed: u64) -> Self {
        CsSweep {
            m,
            n,
            ks,
            instances,
            noise_std: 0.0,
            seed,
            full: vec![Regularizer::l1()],
            partial: vec![Regularizer::l1()],
            fal: FalConfig::default(),
            npg: NpgConfig::default(),
        }
    }

    /// `(penalty, r)` pairs solved at sparsity `k`, full models first.
    pub fn models(&self, k: usize) -> Vec<(Regularizer, usize)> {
        let schedule: Vec<usize> = r_schedule(k).into_iter().filter(|&r| r < self.n).collect();
        self.full
            .iter()
            .map(|phi| (*phi, 0))
            .chain(
                self.partial
                    .iter()
                    .flat_map(|phi| schedule.iter().map(move |&r| (*phi, r))),
            )
            .collect()
    }

    fn spec(&self, k: usize, index: usize) -> CsInstanceSpec {
        CsInstanceSpec {
            m: self.m,
            n: self.n,
            k,
            noise_std: self.noise_std,
            seed: self.seed,
            stream: sweep_stream(k, index),
        }
    }
}

/// Solves one instance with one penalty and scores the result.
/// Solver errors become records with an `error:` status and a zero estimate.
pub fn solve_cs(
    inst: &CsInstance,
    preg: &PartialRegularizer,
    fal: &FalConfig,
    npg: &NpgConfig,
) -> (DVector<f64>, String, Duration, Duration) {
    let wall = Instant::now();
    let (res, cpu) = measure(|| {
        if inst.system.sigma() > 0.0 {
            fal_noisy(&inst.system, preg, fal, npg, None)
        } else {
            fal_noiseless(&inst.system, preg, fal, npg, None)
        }
    });
    let wall = wall.elapsed();
    match res {
        Ok(r) => (r.x, r.status.to_string(), wall, cpu),
        Err(e) => (
            DVector::zeros(inst.x_true.len()),
            format!("error: {e}"),
            wall,
            cpu,
        ),
    }
}

pub fn run_cs_sweep(sweep: &CsSweep) -> Result<Vec<ExperimentRecord>> {
    for &k in &sweep.ks {
        sweep.spec(k, 0).validate()?;
    }
    let tasks: Vec<(usize, usize)> = sweep
        .ks
        .iter()
        .flat_map(|&k| (0..sweep.instances).map(move |i| (k, i)))
        .collect();
    let per_task = tasks
        .par_iter()
        .map(|&(k, i)| cs_task(sweep, k, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_task.into_iter().flatten().collect())
}

fn cs_task(sweep: &CsSweep, k: usize, index: usize) -> Result<Vec<ExperimentRecord>> {
    let inst = gen_cs_instance(&sweep.spec(k, index))?;
    let mut out = Vec::new();
    for (phi, r) in sweep.models(k) {
        let preg = PartialRegularizer::new(phi, r, 1.0)?;
        let (x_hat, status, wall_time, cpu_time) = solve_cs(&inst, &preg, &sweep.fal, &sweep.npg);
        out.push(ExperimentRecord {
            experiment: Experiment::CompressedSensing,
            instance: index,
            k,
            model: ModelId {
                kind: phi.kind(),
                r,
                lambda: 1.0,
                lambda_hat: None,
            },
            success: Some(success(&inst.x_true, &x_hat)?),
            rel_err: Some(rel_err(&inst.x_true, &x_hat)?),
            l_avg: None,
            cardinality: cardinality(&x_hat),
            status,
            flagged: false,
            wall_time,
            cpu_time,
            x_hat,
            x_true: Some(inst.x_true.clone()),
        });
    }
    Ok(out)
}

/// Geometric bisection on the weight of a partial model until its solution
/// has at most the target cardinality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch {
    /// Bracket `[lo_factor, hi_factor] * lambda_max`.
    pub lo_factor: f64,
    pub hi_factor: f64,
    pub max_iters: usize,
    /// Stop once `hi / lo <= 1 + rel_tol`.
    pub rel_tol: f64,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch {
            lo_factor: 1e-6,
            hi_factor: 10.0,
            max_iters: 40,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogregSweep {
    /// Weights as fractions of `lambda_max`.
    pub fractions: Vec<f64>,
    pub phi: Regularizer,
    pub npg: NpgConfig,
    pub search: LambdaSearch,
}

impl Default for LogregSweep {
    fn default() -> Self {
        LogregSweep {
            fractions: vec![0.5, 0.25, 0.1, 0.01],
            phi: Regularizer::l1(),
            npg: NpgConfig::default(),
            search: LambdaSearch::default(),
        }
    }
}

struct LogregFit {
    w: DVector<f64>,
    loss: f64,
    card: usize,
    status: String,
}

fn fit_logreg(data: &LogRegData, preg: &PartialRegularizer, npg: &NpgConfig) -> Result<LogregFit> {
    let out = npg_solve(data, preg, npg, &DVector::zeros(data.num_features()))?;
    Ok(LogregFit {
        loss: data.value(&out.x),
        card: cardinality(&out.x),
        status: out.status.to_string(),
        w: out.x,
    })
}

/// Outcome of a weight search: the weight used, the fit, and whether the
/// bracket failed to contain a weight meeting the target.
fn search_lambda(
    data: &LogRegData,
    phi: Regularizer,
    r: usize,
    target: usize,
    cfg: &LogregSweep,
) -> Result<(f64, LogregFit, bool)> {
    let lmax = data.lambda_max();
    let fit = |lam: f64| fit_logreg(data, &PartialRegularizer::new(phi, r, lam)?, &cfg.npg);
    let mut lo = cfg.search.lo_factor * lmax;
    let mut hi = cfg.search.hi_factor * lmax;
    let lo_fit = fit(lo)?;
    if lo_fit.card <= target {
        return Ok((lo, lo_fit, false));
    }
    let mut hi_fit = fit(hi)?;
    if hi_fit.card > target {
        return Ok((hi, hi_fit, true));
    }
    for _ in 0..cfg.search.max_iters {
        if hi <= lo * (1.0 + cfg.search.rel_tol) {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid_fit = fit(mid)?;
        if mid_fit.card <= target {
            hi = mid;
            hi_fit = mid_fit;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_fit, false))
}

/// For each weight `f * lambda_max`: solve the fully penalized model, take its
/// cardinality `K`, then for every `r` in the schedule of `K` find a weight
/// for the partial model whose solution has cardinality at most `K`.
pub fn run_logreg_sweep(
    data: &LogRegData,
    instance: usize,
    cfg: &LogregSweep,
) -> Result<Vec<ExperimentRecord>> {
    if cfg.fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(HarnessError::Domain(
            "weight fractions must be positive".into(),
        ));
    }
    let lmax = data.lambda_max();
    let n = data.num_features();
    let per_fraction = cfg
        .fractions
        .par_iter()
        .map(|&frac| -> Result<Vec<ExperimentRecord>> {
            let lambda = frac * lmax;
            let record = |r: usize,
                          lambda_hat: Option<f64>,
                          k: usize,
                          fit: LogregFit,
                          flagged,
                          wall: Instant,
                          cpu| {
                ExperimentRecord {
                    experiment: Experiment::Logistic,
                    instance,
                    k,
                    model: ModelId {
                        kind: cfg.phi.kind(),
                        r,
                        lambda,
                        lambda_hat,
                    },
                    success: None,
                    rel_err: None,
                    l_avg: Some(fit.loss),
                    cardinality: fit.card,
                    status: fit.status,
                    flagged,
                    wall_time: wall.elapsed(),
                    cpu_time: cpu,
                    x_hat: fit.w,
                    x_true: None,
                }
            };
            let wall = Instant::now();
            let (full, cpu) = measure(|| {
                fit_logreg(
                    data,
                    &PartialRegularizer::new(cfg.phi, 0, lambda)?,
                    &cfg.npg,
                )
            });
            let full = full?;
            let k = full.card;
            let mut out = vec![record(0, None, k, full, false, wall, cpu)];
            for r in r_schedule(k).into_iter().filter(|&r| r < n) {
                let wall = Instant::now();
                let (found, cpu) = measure(|| search_lambda(data, cfg.phi, r, k, cfg));
                let (lam_hat, fit, flagged) = found?;
                out.push(record(r, Some(lam_hat), k, fit, flagged, wall, cpu));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_fraction.into_iter().flatten().collect())
}

/// Generates `instances` random `m x n` data sets and sweeps each.
pub fn run_logreg_experiment(
    m: usize,
    n: usize,
    instances: usize,
    seed: u64,
    cfg: &LogregSweep,
) -> Result<Vec<ExperimentRecord>> {
    let per_instance = (0..instances)
        .into_par_iter()
        .map(|i| run_logreg_sweep(&gen_logreg_instance(m, n, seed, i as u64)?, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}
