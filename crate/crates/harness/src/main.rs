use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use partialreg_core::analysis::{
    delta_lower_bound, gnsp_falsify, lnsp_falsify, ric_exact_with_cap, NspStatus,
};
use partialreg_core::{fal_noiseless, fal_noisy, LinearSystem, PartialRegularizer, Regularizer};
use partialreg_harness::io::{parse_list, read_matrix, read_vector, write_vector};
use partialreg_harness::record::{write_records, write_summary};
use partialreg_harness::{
    run_cs_sweep, run_logreg_experiment, summarize_cs, CsSweep, HarnessError, LogregSweep, Result,
    SolverConfig,
};

#[derive(Parser)]
#[command(
    name = "partialreg",
    version,
    about = "Sparse recovery with partial regularization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve min Phi(x) s.t. ||Ax - b|| <= sigma; prints the solution, one entry per line.
    Solve(SolveArgs),
    /// Evaluate the scalar prox, or the partial prox of a vector.
    ProxCheck(ProxArgs),
    /// Exact restricted isometry constant: `order,delta,witness`.
    Ric(RicArgs),
    /// Lower bound on nonzero magnitudes of local minimizers: `delta,admissible,witness`.
    DeltaBound(DeltaArgs),
    /// Sample the null space for a violation of the null space property:
    /// `kind,status,samples,min_margin,mean_margin`.
    NspCheck(NspArgs),
    /// Run a sweep and write experiment records as CSV.
    Experiment(ExperimentArgs),
}

/// Penalty options shared by several subcommands.
#[derive(Args)]
struct PenaltyArgs {
    /// Penalty kind: l1, lq, log, capped-l1, mcp, scad.
    #[arg(long)]
    reg: Option<String>,
    /// Extra penalty parameters, e.g. `--param q=0.5`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// `key=value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feasible starting point for the restart safeguard.
    #[arg(long)]
    x_feas: Option<PathBuf>,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the outer-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ProxArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Scalar argument.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "vector")]
    t: Option<f64>,
    /// Comma-separated vector for the partial prox.
    #[arg(long, allow_hyphen_values = true)]
    vector: Option<String>,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
}

#[derive(Args)]
struct RicArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    k: usize,
    /// Largest number of supports to enumerate.
    #[arg(long, default_value_t = 2_000_000)]
    cap: u128,
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NspKindArg {
    Local,
    Global,
}

#[derive(Args)]
struct NspArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    x_star: PathBuf,
    #[arg(long)]
    r: usize,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long, value_enum, default_value_t = NspKindArg::Local)]
    kind: NspKindArg,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Radius of the sampling ball (local check only).
    #[arg(long, default_value_t = 1e-2)]
    eps_ball: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    which: ExperimentKind,
}

#[derive(Subcommand)]
enum ExperimentKind {
    /// Compressed-sensing recovery sweep over K and r.
    Cs(CsArgs),
    /// Logistic regression sweep over lambda and r.
    Logreg(LogregArgs),
}

#[derive(Args)]
struct CsArgs {
    #[arg(long)]
    out: PathBuf,
    /// Per-(K, model) aggregates.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Comma-separated sparsity levels.
    #[arg(long, default_value = "4,8,12,16,20,24,28")]
    ks: String,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Penalty kinds solved as full models, comma separated; partial l1 over
    /// the r schedule is always included.
    #[arg(long, default_value = "l1")]
    regs: String,
    /// Solver settings (`npg.*`, `fal.*`).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LogregArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weights as fractions of lambda_max.
    #[arg(long, default_value = "0.5,0.25,0.1,0.01")]
    fractions: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<SolverConfig> {
    match path {
        Some(p) => SolverConfig::from_file(p),
        None => Ok(SolverConfig::default()),
    }
}

fn apply_penalty(cfg: &mut SolverConfig, p: &PenaltyArgs) -> Result<()> {
    let mut set = |k: &str, v: &str| cfg.set(k, v).map_err(HarnessError::Domain);
    if let Some(reg) = &p.reg {
        set("reg", reg)?;
    }
    for kv in &p.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Domain(format!("expected KEY=VALUE, got `{kv}`")))?;
        let key = if k.contains('.') {
            k.to_string()
        } else {
            format!("phi.{k}")
        };
        set(&key, v)?;
    }
    Ok(())
}

fn penalty_only(p: &PenaltyArgs) -> Result<Regularizer> {
    let mut cfg = SolverConfig::default();
    apply_penalty(&mut cfg, p)?;
    cfg.regularizer()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(args: &SolveArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_penalty(&mut cfg, &args.penalty)?;
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    if let Some(s) = args.sigma {
        cfg.sigma = Some(s);
    }
    let sigma = cfg.sigma.unwrap_or(0.0);
    let sys = LinearSystem::new(read_matrix(&args.matrix)?, read_vector(&args.rhs)?, sigma)?;
    let x_feas = args.x_feas.as_deref().map(read_vector).transpose()?;
    let preg = cfg.partial()?;
    let res = if sigma > 0.0 {
        fal_noisy(&sys, &preg, &cfg.fal, &cfg.npg, x_feas.as_ref())?
    } else {
        fal_noiseless(&sys, &preg, &cfg.fal, &cfg.npg, x_feas.as_ref())?
    };
    eprintln!("{}", res.summary_line());
    if let Some(p) = &args.trace {
        res.write_trace_csv(BufWriter::new(File::create(p)?))?;
    }
    let mut out = output(args.out.as_deref())?;
    write_vector(&mut out, &res.x)?;
    out.flush()?;
    Ok(())
}

fn prox_check(args: &ProxArgs) -> Result<()> {
    let phi = penalty_only(&args.penalty)?;
    match (&args.t, &args.vector) {
        (Some(t), None) => {
            let p = phi.prox(*t, args.step)?;
            println!(
                "{t:.16e},{:.16e},{:.16e},{:.16e}",
                args.step, p.minimizer, p.value
            );
        }
        (None, Some(v)) => {
            let a = parse_list(v)?;
            let preg = PartialRegularizer::new(phi, args.r, 1.0)?;
            let sel = preg.prox(a.as_slice(), args.step)?;
            let obj = preg.prox_objective(a.as_slice(), &sel.solution, args.step)?;
            let join = |xs: &[f64]| {
                xs.iter()
                    .map(|x| format!("{x:.16e}"))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let idx = |xs: &[usize]| {
                xs.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            println!(
                "{},{},{},{obj:.16e}",
                join(&sel.solution),
                idx(&sel.kept),
                idx(&sel.shrunk)
            );
        }
        _ => {
            return Err(HarnessError::Domain(
                "give exactly one of --t or --vector".into(),
            ))
        }
    }
    Ok(())
}

fn join_idx(xs: &[usize]) -> String {
    xs.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn ric(args: &RicArgs) -> Result<()> {
    let res = ric_exact_with_cap(&read_matrix(&args.matrix)?, args.k, args.cap)?;
    println!(
        "{},{:.16e},{}",
        res.order,
        res.delta,
        join_idx(&res.witness)
    );
    Ok(())
}

fn delta_bound(args: &DeltaArgs) -> Result<()> {
    let res = delta_lower_bound(&read_matrix(&args.matrix)?, &read_vector(&args.rhs)?)?;
    let witness = res.witness.as_deref().map(join_idx).unwrap_or_default();
    println!("{:.16e},{},{witness}", res.value, res.admissible);
    Ok(())
}

fn nsp_check(args: &NspArgs) -> Result<()> {
    let a = read_matrix(&args.matrix)?;
    let x: DVector<f64> = read_vector(&args.x_star)?;
    let phi = penalty_only(&args.penalty)?;
    let v = match args.kind {
        NspKindArg::Local => {
            lnsp_falsify(&a, &x, args.r, &phi, args.eps_ball, args.samples, args.seed)?
        }
        NspKindArg::Global => gnsp_falsify(&a, &x, args.r, &phi, args.samples, args.seed)?,
    };
    let status = match &v.status {
        NspStatus::Falsified { .. } => "falsified",
        NspStatus::NotFalsified { .. } => "not-falsified",
    };
    let kind = match args.kind {
        NspKindArg::Local => "local",
        NspKindArg::Global => "global",
    };
    println!(
        "{kind},{status},{},{:.16e},{:.16e}",
        v.samples_tested, v.min_margin, v.mean_margin
    );
    if let Some(note) = &v.note {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn parse_usizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| HarnessError::Domain(format!("cannot parse `{t}` as an integer")))
        })
        .collect()
}

fn experiment_cs(args: &CsArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let phis = args
        .regs
        .split(',')
        .map(|k| Ok(Regularizer::with_defaults(k.parse()?)))
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = CsSweep::l1(
        args.m,
        args.n,
        parse_usizes(&args.ks)?,
        args.instances,
        args.seed,
    );
    sweep.noise_std = args.noise_std;
    sweep.fal = cfg.fal;
    sweep.npg = cfg.npg;
    sweep.full = phis;
    let records = run_cs_sweep(&sweep)?;
    write_records(BufWriter::new(File::create(&args.out)?), &records)?;
    if let Some(p) = &args.summary {
        write_summary(BufWriter::new(File::create(p)?), &summarize_cs(&records))?;
    }
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn experiment_logreg(args: &LogregArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let fractions = args
        .fractions
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::Domain(format!("cannot parse `{t}` as a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    let sweep = LogregSweep {
        fractions,
        phi: cfg.regularizer()?,
        npg: cfg.npg,
        ..LogregSweep::default()
    };
    let records = run_logreg_experiment(args.m, args.n, args.instances, args.seed, &sweep)?;
    write_records(BufWriter::new(File::create(&args.out)?), &records)?;
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::ProxCheck(a) => prox_check(&a),
        Command::Ric(a) => ric(&a),
        Command::DeltaBound(a) => delta_bound(&a),
        Command::NspCheck(a) => nsp_check(&a),
        Command::Experiment(e) => match e.which {
            ExperimentKind::Cs(a) => experiment_cs(&a),
            ExperimentKind::Logreg(a) => experiment_logreg(&a),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
