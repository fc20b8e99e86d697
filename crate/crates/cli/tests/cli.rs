use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsrlab_core::harness::{read_results, CSV_HEADER};

fn nsrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsrlab")).args(args).env_remove("NSRLAB_WORKERS").output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn bogus_op_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = nsrlab(&["compare", "--op", "bogus", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn invalid_config_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    for args in [
        &["compare", "--op", "gt", "--lambda", "0"][..],
        &["compare", "--op", "gt", "--epochs", "0"],
        &["compare", "--op", "gt", "--seeds", "4..1"],
        &["compare", "--op", "gt", "--exponents", "2..40"],
        &["floats", "--deltas", "-1"],
        &["recurrent", "--kind", "median"],
        &["sssp", "--nodes", "1"],
    ] {
        let mut full = args.to_vec();
        full.extend(["--out", path_str(&out)]);
        let o = nsrlab(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.exists(), "{args:?}");
    }
}

#[test]
fn compare_row_count_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub/cmp.csv");
    let o = nsrlab(&["compare", "--op", "gt", "--redundancy", "10", "--seeds", "0..2", "--epochs", "5", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.len(), 3 * 13 * 2);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().next().unwrap(), CSV_HEADER.join(","));
    let echo = fs::read_to_string(dir.path().join("sub/cmp.config.txt")).unwrap();
    for line in ["command = compare", "op = gt", "seeds = 0,1,2", "epochs = 5", "redundancy = 10", "exponents = 2,3,4,5,6,7,8,9,10,11,12,13"] {
        assert!(echo.lines().any(|l| l == line), "missing `{line}` in\n{echo}");
    }
}

#[test]
fn floats_grid_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = nsrlab(&[
        "floats", "--ops", "gt,eq", "--deltas", "0.01,1", "--lambdas", "1,100,1000", "--exponents", "2,3", "--epochs", "3",
        "--seeds", "5", "--out", path_str(&out),
    ]);
    assert!(o.status.success());
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3 * 3);
    assert!(rows.iter().any(|r| r.delta == 0.01 && r.lambda == Some(1000.0) && r.op == "eq"));
}

#[test]
fn redundancy_and_recurrent_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = nsrlab(&["redundancy", "--r-range", "1..2", "--epochs", "2", "--seeds", "0", "--exponents", "3", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert_eq!(read_results(&out).unwrap().len(), 3 * 2 * 2);

    let o = nsrlab(&[
        "recurrent", "--kind", "min", "--epochs", "2", "--seeds", "0", "--train-lists", "5", "--lengths", "5,10,15",
        "--magnitudes", "train,2..3", "--eval-lists", "3", "--out", path_str(&out),
    ]);
    assert!(o.status.success());
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 3);
    assert_eq!(rows.iter().filter(|r| r.magnitude.is_none()).count(), 2 * 3);
}

#[test]
fn help_lists_defaults() {
    let o = nsrlab(&["compare", "--help"]);
    let help = String::from_utf8(o.stdout).unwrap();
    for default in ["[default: 0..9]", "[default: 50000]", "[default: 1]", "[default: 10]", "[default: 2..13]", "[default: results.csv]"] {
        assert!(help.contains(default), "missing {default} in\n{help}");
    }
    let sssp = String::from_utf8(nsrlab(&["sssp", "--help"]).stdout).unwrap();
    for flag in ["--scales", "--train-graphs", "--nodes", "--max-weight", "--test-graphs", "--shuffled-order", "--workers"] {
        assert!(sssp.contains(flag), "missing {flag}");
    }
}

#[test]
fn selftest_passes() {
    let o = nsrlab(&["selftest", "--seed", "11"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("selftest passed\n"));
}
