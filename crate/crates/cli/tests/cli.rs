//! End-to-end tests of the installed binary: exit codes, file outputs,
//! and rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

fn armwise(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armwise"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate_small(dir: &Path) {
    let out = armwise(
        dir,
        &[
            "simulate",
            "--output-dir",
            "sim",
            "--n-patients",
            "80",
            "--n-features",
            "5",
            "--seed",
            "5",
            "--tau=-4",
            "--noise-sd",
            "1",
        ],
    );
    assert_ok(&out);
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = armwise(dir.path(), &["ate", "--input", "no_such.csv", "--output-dir", "out"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no_such.csv"), "stderr: {stderr}");
}

#[test]
fn too_small_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = armwise(dir.path(), &["simulate", "--output-dir", "out", "--n-patients", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_then_ate_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path());
    for name in ["cohort.csv", "oracle.json", "run_manifest.json"] {
        assert!(dir.path().join("sim").join(name).is_file(), "missing {name}");
    }

    let ate_args = [
        "ate",
        "--input",
        "sim/cohort.csv",
        "--output-dir",
        "ate",
        "--bootstrap",
        "400",
        "--permutations",
        "400",
    ];
    assert_ok(&armwise(dir.path(), &ate_args));
    let first = std::fs::read(dir.path().join("ate/ate_report.json")).unwrap();

    // Rerun in place: every output must be byte-identical.
    assert_ok(&armwise(dir.path(), &ate_args));
    let second = std::fs::read(dir.path().join("ate/ate_report.json")).unwrap();
    assert_eq!(first, second, "rerun changed ate_report.json");

    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows[0]["outcome"], "pec");
    let ate = rows[0]["ate"].as_f64().unwrap();
    assert!(ate < 0.0, "tau=-4 must show a negative standardized ATE, got {ate}");
}

#[test]
fn policy_report_contains_every_row_family() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path());
    let out = armwise(
        dir.path(),
        &[
            "policy",
            "--input",
            "sim/cohort.csv",
            "--oracle",
            "sim/oracle.json",
            "--output-dir",
            "pol",
            "--random-draws",
            "150",
        ],
    );
    assert_ok(&out);

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("pol/policy_report.json")).unwrap())
            .unwrap();
    let rows = report["rows"].as_array().unwrap();
    let families: Vec<&str> = rows.iter().map(|r| r["family"].as_str().unwrap()).collect();
    for family in [
        "constant",
        "random",
        "threshold-in-sample",
        "threshold-out-of-fold",
        "s-learner",
        "t-learner",
        "oracle",
    ] {
        assert!(families.contains(&family), "missing family {family} in {families:?}");
    }
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert!(labels.contains(&"1FED") && labels.contains(&"6FED"), "labels: {labels:?}");

    // With an oracle sidecar every row carries a true value.
    assert!(rows.iter().all(|r| r["true_value"].is_number()));
    assert!(report["random"]["draws"].as_array().unwrap().len() == 150);

    // The assignment export covers each exported policy for every patient.
    let assignments = std::fs::read_to_string(dir.path().join("pol/assignments.csv")).unwrap();
    let lines = assignments.lines().count();
    assert_eq!(lines, 1 + 3 * 80, "threshold-oof + 2 grid models, 80 patients each");
}

#[test]
fn importance_rejects_non_tree_base() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path());
    std::fs::write(
        dir.path().join("grid.toml"),
        "[[model]]\nkind = \"t-learner\"\n[model.base]\nkind = \"support-vector\"\n",
    )
    .unwrap();
    let out = armwise(
        dir.path(),
        &[
            "importance",
            "--input",
            "sim/cohort.csv",
            "--output-dir",
            "imp",
            "--grid",
            "grid.toml",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("tree"), "stderr: {stderr}");
}

#[test]
fn importance_emits_four_panels() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path());
    let out = armwise(
        dir.path(),
        &["importance", "--input", "sim/cohort.csv", "--output-dir", "imp"],
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("imp/importance_report.json")).unwrap(),
    )
    .unwrap();
    let panels = report["panels"].as_array().unwrap();
    assert_eq!(panels.len(), 4);
    let targets: Vec<&str> = panels.iter().map(|p| p["target"].as_str().unwrap()).collect();
    assert_eq!(targets.iter().filter(|t| **t == "continuous-delta").count(), 2);
    assert_eq!(targets.iter().filter(|t| **t == "binary-remission").count(), 2);
}

#[test]
fn plot_data_emits_curve_draws_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path());
    let out = armwise(
        dir.path(),
        &[
            "plot-data",
            "--input",
            "sim/cohort.csv",
            "--output-dir",
            "pd",
            "--random-draws",
            "100",
        ],
    );
    assert_ok(&out);
    for name in [
        "threshold_curve.csv",
        "random_draws.csv",
        "outcome_hist.csv",
        "effectiveness_hist.csv",
        "run_manifest.json",
    ] {
        assert!(dir.path().join("pd").join(name).is_file(), "missing {name}");
    }
    let draws = std::fs::read_to_string(dir.path().join("pd/random_draws.csv")).unwrap();
    assert_eq!(draws.lines().count(), 101, "header plus one line per draw");
}
