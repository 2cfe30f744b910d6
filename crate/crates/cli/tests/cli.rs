use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_splitrange"));
    cmd.env_remove("SPLITRANGE_OUT");
    cmd
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("splitrange-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn experiment_reports_pass() {
    let out = bin().args(["experiment", "rotation_counterexample", "--no-timestamp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["schema_version"], "1.0");
    assert_eq!(report["pass"], true);
    assert!(report.get("runtime_ms").is_none());
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let run = || {
        bin()
            .args(["experiment", "two_subspaces", "--seed", "3", "--no-timestamp"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn perturbed_boundary_point_is_unsolved() {
    let pair = data("twoballs.json");
    let out = bin()
        .args(["perturbed", "--pair", pair.to_str().unwrap(), "--w", "-3,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "UNSOLVED");
    let out = bin()
        .args(["perturbed", "--pair", pair.to_str().unwrap(), "--w", "-1,0"])
        .output()
        .unwrap();
    assert_eq!(json(&out)["status"], "SOLVED");
}

#[test]
fn displacement_estimate() {
    let out = bin()
        .args(["displacement", "--pair", data("twoballs.json").to_str().unwrap(), "--x0", "0.3,0.7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = &json(&out)["estimate"]["v"];
    assert!((v[0].as_f64().unwrap() + 1.0).abs() < 1e-6 && v[1].as_f64().unwrap().abs() < 1e-6, "{v}");
}

#[test]
fn range_writes_csv_and_compare_reads_it() {
    let dir = scratch("range");
    let out = bin()
        .args(["range", "--pair", data("ball_line.json").to_str().unwrap(), "--samples", "2000", "--window", "30"])
        .args(["--output-dir", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["outside_predicted"], 0);
    assert_eq!(summary["affine_hull_dim"], 2);
    let csv = dir.join("range_displacement.csv");
    assert!(csv.exists());
    let out = bin()
        .args(["compare", "--cloud-a", csv.to_str().unwrap(), "--cloud-b", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["verdict"], true);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn compare_reports_failure_with_exit_one() {
    let dir = scratch("compare");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    std::fs::write(&a, "x0,x1\n0,0\n1,0\n0,1\n").unwrap();
    std::fs::write(&b, "0,0\n3,0\n0,3\n").unwrap();
    let out = bin()
        .args(["compare", "--cloud-a", a.to_str().unwrap(), "--cloud-b", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["report"]["verdict"], false);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().args(["experiment", "no_such_thing"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["bogus-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["experiment", "angle_v", "--param", "thetta=0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thetta"));
}

#[test]
fn spec_errors_name_the_field() {
    let out = bin()
        .args(["displacement", "--pair", data("typo.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("centre"));
}

#[test]
fn params_are_recorded() {
    let out = bin()
        .args(["experiment", "angle_v", "--param", "theta=0", "--no-timestamp"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["params"]["theta"], serde_json::json!([0.0]));
}

#[test]
fn env_var_sets_output_dir() {
    let dir = scratch("env");
    let out = bin()
        .env("SPLITRANGE_OUT", &dir)
        .args(["experiment", "rotation_line", "--no-timestamp"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("rotation_line.json").exists());
    assert!(dir.join("rotation_line/displacements.csv").exists());
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn all_runs_the_registry() {
    let out = bin().args(["experiment", "--all", "--no-timestamp"]).output().unwrap();
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.contains("brezis_haraux_gap") && table.contains("PASS"));
    assert!(!table.contains("FAIL"));
}
