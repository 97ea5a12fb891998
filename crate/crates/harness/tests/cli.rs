//! End-to-end runs of the `partialreg` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_partialreg");

const MATRIX: &str = "1,-1,0,0,0\n1,0,1,0,0\n1,0,0,1,0\n1,0,0,0,1\n";
const RHS: &str = "0\n1\n2\n3\n";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn floats(line: &str, sep: char) -> Vec<f64> {
    line.split(sep).map(|f| f.trim().parse().unwrap()).collect()
}

#[test]
fn solve_recovers_sparsest_point() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", MATRIX);
    let b = write(dir.path(), "b.csv", RHS);
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "solve",
        "--matrix",
        &a,
        "--rhs",
        &b,
        "--reg",
        "l1",
        "--r",
        "2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let x: Vec<f64> = stdout(&out).lines().map(|l| l.parse().unwrap()).collect();
    let target = [0.0, 0.0, 1.0, 2.0, 3.0];
    for (xi, ti) in x.iter().zip(target) {
        assert!((xi - ti).abs() < 1e-4, "{x:?}");
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("status=converged"));
    assert!(std::fs::read_to_string(trace).unwrap().lines().count() > 1);
}

#[test]
fn solve_reads_config_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", MATRIX);
    let b = write(dir.path(), "b.csv", RHS);
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# full penalty\nreg=l1 r=0\nsigma=0.5\n",
    );
    let x = dir.path().join("x.csv");
    let out = run(&[
        "solve",
        "--matrix",
        &a,
        "--rhs",
        &b,
        "--config",
        &cfg,
        "--out",
        x.to_str().unwrap(),
    ]);
    stdout(&out);
    assert_eq!(std::fs::read_to_string(x).unwrap().lines().count(), 5);
}

#[test]
fn prox_check_scalar_and_vector() {
    let line = stdout(&run(&[
        "prox-check",
        "--reg",
        "l1",
        "--t",
        "-3",
        "--step",
        "1",
    ]));
    let v = floats(line.trim(), ',');
    assert_eq!(v[2], -2.0);
    assert_eq!(v[3], 2.5);

    let line = stdout(&run(&[
        "prox-check",
        "--reg",
        "l1",
        "--vector",
        "3,-0.5,1.5",
        "--r",
        "1",
    ]));
    let fields: Vec<&str> = line.trim().split(',').collect();
    assert_eq!(floats(fields[0], ';'), vec![3.0, 0.0, 0.5]);
    assert_eq!(fields[1], "0");
}

#[test]
fn ric_delta_and_nsp_on_small_example() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", MATRIX);
    let b = write(dir.path(), "b.csv", RHS);
    let x = write(dir.path(), "x.csv", "0,0,1,2,3\n");

    let line = stdout(&run(&["ric", "--matrix", &a, "--k", "1"]));
    let fields: Vec<&str> = line.trim().split(',').collect();
    assert_eq!(fields[0], "1");
    assert!((fields[1].parse::<f64>().unwrap() - 3.0).abs() < 1e-12);

    let line = stdout(&run(&["delta-bound", "--matrix", &a, "--rhs", &b]));
    let delta: f64 = line.split(',').next().unwrap().parse().unwrap();
    assert!(delta > 0.0 && delta <= 1.0, "{delta}");

    let line = stdout(&run(&[
        "nsp-check",
        "--matrix",
        &a,
        "--x-star",
        &x,
        "--r",
        "2",
        "--reg",
        "l1",
        "--samples",
        "500",
    ]));
    assert!(line.starts_with("local,not-falsified,"), "{line}");
}

#[test]
fn cs_experiment_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.csv");
    let sum = dir.path().join("sum.csv");
    stdout(&run(&[
        "experiment",
        "cs",
        "--m",
        "8",
        "--n",
        "16",
        "--ks",
        "2",
        "--instances",
        "2",
        "--out",
        rec.to_str().unwrap(),
        "--summary",
        sum.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(rec).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("experiment,instance,k,reg,r"));
    // full model plus r in {1, 2}, for each of two instances
    assert_eq!(lines.count(), 6);
    assert!(std::fs::read_to_string(sum).unwrap().lines().count() >= 2);
}

#[test]
fn bad_input_exits_with_error() {
    let out = run(&[
        "solve",
        "--matrix",
        "/nonexistent.csv",
        "--rhs",
        "/nonexistent.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(&["prox-check", "--reg", "nope", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
