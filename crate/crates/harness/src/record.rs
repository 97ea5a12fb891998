//! Experiment records and their CSV form.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::time::Duration;

use nalgebra::DVector;
use partialreg_core::RegularizerKind;

use crate::error::Result;
use crate::metrics::{rel_err, success};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    CompressedSensing,
    Logistic,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::CompressedSensing => "cs",
            Experiment::Logistic => "logreg",
        })
    }
}

/// Which model produced a record: penalty kind, number of free entries and
/// the weight actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelId {
    pub kind: RegularizerKind,
    pub r: usize,
    pub lambda: f64,
    /// Weight found by the cardinality-matching search, when one was run.
    pub lambda_hat: Option<f64>,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/r={}", self.kind.name(), self.r)
    }
}

/// One row per (instance, model) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: Experiment,
    pub instance: usize,
    /// Sparsity level for compressed sensing, target cardinality for logistic runs.
    pub k: usize,
    pub model: ModelId,
    pub success: Option<bool>,
    pub rel_err: Option<f64>,
    pub l_avg: Option<f64>,
    pub cardinality: usize,
    /// Solver status, or the error text when the solver refused the input.
    pub status: String,
    /// Set when a weight search ran out of bracket.
    pub flagged: bool,
    pub wall_time: Duration,
    pub cpu_time: Duration,
    pub x_hat: DVector<f64>,
    pub x_true: Option<DVector<f64>>,
}

pub const CSV_HEADER: &str =
    "experiment,instance,k,reg,r,lambda,lambda_hat,success,rel_err,l_avg,cardinality,status,flagged,wall_s,cpu_s";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

impl ExperimentRecord {
    /// Recomputes `success` and `rel_err` from the stored vectors and checks
    /// they match the recorded values.
    pub fn metrics_consistent(&self) -> Result<bool> {
        let Some(x_true) = &self.x_true else {
            return Ok(self.success.is_none() && self.rel_err.is_none());
        };
        let s = success(x_true, &self.x_hat)?;
        let e = rel_err(x_true, &self.x_hat)?;
        Ok(self.success == Some(s) && self.rel_err == Some(e))
    }

    pub fn csv_row(&self) -> String {
        let status = self.status.replace([',', '\n'], ";");
        [
            self.experiment.to_string(),
            self.instance.to_string(),
            self.k.to_string(),
            self.model.kind.name().to_string(),
            self.model.r.to_string(),
            float(self.model.lambda),
            opt_float(self.model.lambda_hat),
            self.success
                .map(|s| (s as u8).to_string())
                .unwrap_or_default(),
            opt_float(self.rel_err),
            opt_float(self.l_avg),
            self.cardinality.to_string(),
            status,
            (self.flagged as u8).to_string(),
            float(self.wall_time.as_secs_f64()),
            float(self.cpu_time.as_secs_f64()),
        ]
        .join(",")
    }
}

pub fn write_records<W: Write>(mut out: W, records: &[ExperimentRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Aggregate of the compressed-sensing records of one model at one sparsity level.
#[derive(Debug, Clone, PartialEq)]
pub struct CsSummary {
    pub k: usize,
    pub kind: RegularizerKind,
    pub r: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_rel_err: f64,
    pub cpu_time: Duration,
}

impl CsSummary {
    pub fn frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

pub const SUMMARY_HEADER: &str = "k,reg,r,trials,successes,frequency,mean_rel_err,cpu_s";

impl CsSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k,
            self.kind.name(),
            self.r,
            self.trials,
            self.successes,
            float(self.frequency()),
            float(self.mean_rel_err),
            float(self.cpu_time.as_secs_f64())
        )
    }
}

/// Groups compressed-sensing records by `(K, kind, r)`, ordered by that key.
pub fn summarize_cs(records: &[ExperimentRecord]) -> Vec<CsSummary> {
    let mut groups: BTreeMap<(usize, RegularizerKind, usize), CsSummary> = BTreeMap::new();
    for rec in records
        .iter()
        .filter(|r| r.experiment == Experiment::CompressedSensing)
    {
        let key = (rec.k, rec.model.kind, rec.model.r);
        let entry = groups.entry(key).or_insert(CsSummary {
            k: rec.k,
            kind: rec.model.kind,
            r: rec.model.r,
            trials: 0,
            successes: 0,
            mean_rel_err: 0.0,
            cpu_time: Duration::ZERO,
        });
        entry.trials += 1;
        entry.successes += rec.success.unwrap_or(false) as usize;
        entry.mean_rel_err += rec.rel_err.unwrap_or(f64::NAN);
        entry.cpu_time += rec.cpu_time;
    }
    groups
        .into_values()
        .map(|mut s| {
            s.mean_rel_err /= s.trials as f64;
            s
        })
        .collect()
}

pub fn write_summary<W: Write>(mut out: W, summary: &[CsSummary]) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summary {
        writeln!(out, "{}", s.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, r: usize, ok: bool) -> ExperimentRecord {
        let x_true = DVector::from_vec(vec![1.0, 0.0]);
        let x_hat = if ok {
            x_true.clone()
        } else {
            DVector::from_vec(vec![0.5, 0.0])
        };
        ExperimentRecord {
            experiment: Experiment::CompressedSensing,
            instance: 0,
            k,
            model: ModelId {
                kind: RegularizerKind::L1,
                r,
                lambda: 1.0,
                lambda_hat: None,
            },
            success: Some(ok),
            rel_err: Some(rel_err(&x_true, &x_hat).unwrap()),
            l_avg: None,
            cardinality: 1,
            status: "converged, fine".into(),
            flagged: false,
            wall_time: Duration::from_millis(5),
            cpu_time: Duration::from_millis(4),
            x_hat,
            x_true: Some(x_true),
        }
    }

    #[test]
    fn csv_row_shape() {
        let row = record(2, 1, true).csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with(
            "cs,0,2,l1,1,1.0000000000000000e0,,1,0.0000000000000000e0,,1,converged; fine,0,"
        ));
    }

    #[test]
    fn metrics_recompute() {
        let mut rec = record(2, 1, false);
        assert!(rec.metrics_consistent().unwrap());
        rec.success = Some(true);
        assert!(!rec.metrics_consistent().unwrap());
    }

    #[test]
    fn summary_groups_by_cell() {
        let recs = vec![record(4, 1, true), record(2, 0, false), record(4, 1, false)];
        let s = summarize_cs(&recs);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].k, s[0].trials, s[0].successes), (2, 1, 0));
        assert_eq!((s[1].k, s[1].trials, s[1].successes), (4, 2, 1));
        assert_eq!(s[1].frequency(), 0.5);
        assert!((s[1].mean_rel_err - 0.25).abs() < 1e-15);
        let mut buf = Vec::new();
        write_summary(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
