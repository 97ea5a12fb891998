//! Experiment generation and orchestration for partial-regularization
//! solvers: random compressed-sensing and logistic-regression instances,
//! recovery metrics, parameter sweeps and CSV output.

pub mod config;
pub mod cputime;
pub mod error;
pub mod instances;
pub mod io;
pub mod metrics;
pub mod record;
pub mod rng;
pub mod sweep;

pub use config::SolverConfig;
pub use error::{HarnessError, Result};
pub use instances::{
    gen_cs_instance, gen_incoherent_frame, gen_logreg_instance, CsInstance, CsInstanceSpec,
};
pub use metrics::{cardinality, r_schedule, rel_err, success};
pub use record::{summarize_cs, CsSummary, Experiment, ExperimentRecord, ModelId};
pub use sweep::{run_cs_sweep, run_logreg_experiment, run_logreg_sweep, CsSweep, LogregSweep};
