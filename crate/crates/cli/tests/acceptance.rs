//! Acceptance gate: every release-blocking property, one test per
//! criterion, each printing exactly one `criterion N: PASS/FAIL` line
//! (run with `--nocapture` to see them all).
//!
//! Statistical criteria run against the synthetic oracle with frozen
//! seeds, so each is a deterministic check, not a flaky sample.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use armwise::evaluation::{
    ate, constant_policy, cross_validated_policy, policy_value, random_policy,
    random_policy_distribution, AteOptions, PolicyValueResult,
};
use armwise::learners::BoostedParams;
use armwise::meta::assign;
use armwise::synthetic::{generate, true_policy_value};
use armwise::{
    Arm, CounterfactualScores, EffectModel, FoldPlan, LearnerSpec, Matrix, MetaKind, MetaSpec,
    Policy, Provenance, ScenarioSpec, StandardizeMode, ThresholdValue,
};
use armwise_cli::SharedArgs;

fn check(criterion: usize, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn scenario(n: usize, effect: EffectModel, noise_sd: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        n_patients: n,
        n_features: 6,
        effect,
        noise_sd,
        missing_rate: 0.0,
        pec_shift: 15.0,
        pec_scale: 0.5,
        seed,
    }
}

fn raw_pec_deltas(cohort: &armwise::Cohort) -> Vec<f64> {
    armwise::cohort::outcome_deltas(cohort).unwrap().column(0)
}

// ── 1. ATE recovery ─────────────────────────────────────────────────────

#[test]
fn criterion_01_ate_recovery() {
    const REPS: usize = 200;
    const TAU: f64 = -2.0;
    let mut estimates = Vec::with_capacity(REPS);
    let mut covered = 0usize;
    for rep in 0..REPS {
        let mut spec = scenario(200, EffectModel::Constant { tau: TAU }, 1.0, 41_000 + rep as u64);
        spec.pec_scale = 1.0;
        let trial = generate(&spec).unwrap();
        let raw = raw_pec_deltas(&trial.cohort);
        let res = ate(
            "pec",
            &raw,
            &trial.cohort.arms(),
            &AteOptions { bootstrap: 2000, permutations: 0, seed: rep as u64 },
        )
        .unwrap();
        estimates.push(res.ate);
        if res.ci_low <= TAU && TAU <= res.ci_high {
            covered += 1;
        }
    }
    let mean = estimates.iter().sum::<f64>() / REPS as f64;
    let mean_ok = (mean - TAU).abs() <= 0.1;
    let coverage_ok = covered * 100 >= 91 * REPS;
    check(
        1,
        mean_ok && coverage_ok,
        format!("mean ATE {mean:.4} (want {TAU}±0.1), CI coverage {covered}/{REPS} (want ≥{})", 91 * REPS / 100),
    );
}

// ── 2. Null calibration ─────────────────────────────────────────────────

#[test]
fn criterion_02_null_calibration() {
    const REPS: usize = 200;
    let mut significant = 0usize;
    for rep in 0..REPS {
        let spec = scenario(200, EffectModel::Constant { tau: 0.0 }, 1.0, 42_000 + rep as u64);
        let trial = generate(&spec).unwrap();
        let raw = raw_pec_deltas(&trial.cohort);
        let res = ate(
            "pec",
            &raw,
            &trial.cohort.arms(),
            &AteOptions { bootstrap: 0, permutations: 2000, seed: rep as u64 },
        )
        .unwrap();
        if res.p_value <= 0.05 {
            significant += 1;
        }
    }
    check(
        2,
        significant * 100 <= 7 * REPS,
        format!("p ≤ 0.05 in {significant}/{REPS} null trials (allow ≤ {})", 7 * REPS / 100),
    );
}

// ── 3. Policy-value estimator unbiasedness ──────────────────────────────

#[test]
fn criterion_03_policy_value_unbiasedness() {
    const REPS: usize = 500;
    let effect = EffectModel::ThresholdHeterogeneous {
        boundary_feature: 1,
        tau_low: -2.0,
        tau_high: 1.0,
        boundary_value: None,
    };
    // estimate − truth per replicate, per policy family.
    let mut diffs: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for rep in 0..REPS {
        let spec = scenario(500, effect.clone(), 1.0, 43_000 + rep as u64);
        let trial = generate(&spec).unwrap();
        let cohort = &trial.cohort;
        let arms = cohort.arms();
        let remission = cohort.remission_labels();
        let raw = raw_pec_deltas(cohort);

        let threshold_rule = Policy {
            assignments: cohort
                .pec_start_column()
                .iter()
                .map(|&v| if v > 15.5 { Arm::Arm1 } else { Arm::Arm0 })
                .collect(),
            provenance: Provenance::Threshold {
                feature: "pec".into(),
                threshold: ThresholdValue::Value(15.5),
                high_arm: Arm::Arm1,
            },
            scores: None,
            fold_of: None,
        };
        let policies = [
            constant_policy(cohort.n_patients(), Arm::Arm1),
            random_policy(&cohort.canonical_order(), 43_500 + rep as u64),
            threshold_rule,
        ];
        for (k, policy) in policies.iter().enumerate() {
            let est = policy_value(policy, &arms, &raw, &remission).unwrap();
            diffs[k].push(est.mean_outcome.unwrap() - true_policy_value(policy, &trial));
        }
    }

    let mut pass = true;
    let mut details = Vec::new();
    for (name, d) in ["constant", "random", "threshold"].iter().zip(&diffs) {
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        let se = (var / d.len() as f64).sqrt();
        pass &= mean.abs() <= 2.0 * se;
        details.push(format!("{name} bias {mean:+.4} ({:.2} SE)", mean / se));
    }
    check(3, pass, details.join(", "));
}

// ── 4/5/6. Shared heterogeneous-scenario runs ───────────────────────────

struct HeterogeneousRun {
    t_value: PolicyValueResult,
    s_value: PolicyValueResult,
    both_constants_in_band: bool,
    effectiveness_q975: f64,
    oracle_agreement: f64,
}

/// Twenty seeded end-to-end runs of the paper-shaped pipeline on the
/// threshold-heterogeneous scenario; criteria 4, 5 and 6 each read a
/// different aspect.
fn heterogeneous_runs() -> &'static Vec<HeterogeneousRun> {
    static RUNS: OnceLock<Vec<HeterogeneousRun>> = OnceLock::new();
    RUNS.get_or_init(|| (0..20).map(heterogeneous_run).collect())
}

fn heterogeneous_run(index: u64) -> HeterogeneousRun {
    let effect = EffectModel::ThresholdHeterogeneous {
        boundary_feature: 1,
        tau_low: -1.0,
        tau_high: 1.0,
        boundary_value: None,
    };
    let trial = generate(&scenario(400, effect, 0.5, 44_000 + index)).unwrap();
    let cohort = &trial.cohort;
    let n = cohort.n_patients();
    let arms = cohort.arms();
    let remission = cohort.remission_labels();
    let raw = raw_pec_deltas(cohort);
    let plan = FoldPlan::derive(cohort, 6, true).unwrap();
    let base = LearnerSpec::BoostedTrees(BoostedParams::default()).with_seed(index);

    let dist = random_policy_distribution(
        &cohort.canonical_order(),
        &arms,
        &raw,
        &remission,
        1000,
        45_000 + index,
    );
    let evaluate = |policy: &Policy| {
        let mut v = policy_value(policy, &arms, &raw, &remission).unwrap();
        dist.calibrate(&mut v);
        v
    };

    let t_policy = cross_validated_policy(
        &MetaSpec::new(MetaKind::TLearner, base.clone()),
        cohort,
        &plan,
        StandardizeMode::Global,
    )
    .unwrap();
    let s_policy = cross_validated_policy(
        &MetaSpec::new(MetaKind::SLearner, base),
        cohort,
        &plan,
        StandardizeMode::Global,
    )
    .unwrap();

    let band = dist.effectiveness_band.expect("labels are complete");
    let in_band = |policy: &Policy| band.contains(evaluate(policy).effectiveness.unwrap());
    let agree = t_policy
        .assignments
        .iter()
        .zip(&trial.oracle_policy.assignments)
        .filter(|(a, b)| a == b)
        .count();

    HeterogeneousRun {
        t_value: evaluate(&t_policy),
        s_value: evaluate(&s_policy),
        both_constants_in_band: in_band(&constant_policy(n, Arm::Arm0))
            && in_band(&constant_policy(n, Arm::Arm1)),
        effectiveness_q975: band.q975,
        oracle_agreement: agree as f64 / n as f64,
    }
}

#[test]
fn criterion_04_heterogeneity_detection() {
    let runs = heterogeneous_runs();
    let detected = runs
        .iter()
        .filter(|r| {
            r.t_value.effectiveness.unwrap() > r.effectiveness_q975
                && r.t_value.empirical_p.unwrap() < 0.01
        })
        .count();
    let constants_inside = runs.iter().filter(|r| r.both_constants_in_band).count();
    check(
        4,
        detected >= 18 && constants_inside >= 18,
        format!(
            "t-learner above 97.5th percentile with p<0.01 in {detected}/20, constants inside 95% band in {constants_inside}/20 (need ≥18 each)"
        ),
    );
}

#[test]
fn criterion_05_meta_learner_ordering() {
    let runs = heterogeneous_runs();
    // Policy value in outcome units: larger decrease (lower mean delta)
    // is better; ties count for the t-learner.
    let t_wins = runs
        .iter()
        .filter(|r| r.t_value.mean_outcome.unwrap() <= r.s_value.mean_outcome.unwrap())
        .count();
    check(
        5,
        t_wins >= 15,
        format!("t-learner value ≥ s-learner value in {t_wins}/20 runs (need ≥15)"),
    );
}

#[test]
fn criterion_06_oracle_agreement() {
    let runs = heterogeneous_runs();
    let mean = runs.iter().map(|r| r.oracle_agreement).sum::<f64>() / runs.len() as f64;
    check(
        6,
        mean >= 0.85,
        format!("mean out-of-fold t-learner agreement with oracle policy {mean:.3} (need ≥0.85)"),
    );
}

// ── 7. Importance recovery ──────────────────────────────────────────────

#[test]
fn criterion_07_importance_recovery() {
    // The arm-1 outcome depends on the covariates only through feature 3
    // (tau steps on f03; everything else is noise for both arms).
    let effect = EffectModel::ThresholdHeterogeneous {
        boundary_feature: 3,
        tau_low: -2.0,
        tau_high: 0.0,
        boundary_value: None,
    };
    let mut top_hits = 0usize;
    for index in 0..20u64 {
        let trial = generate(&scenario(400, effect.clone(), 0.5, 46_000 + index)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("cohort.csv");
        armwise::cohort::save_cohort(&input, &trial.cohort, &Default::default()).unwrap();

        let args = SharedArgs {
            input: Some(input),
            output_dir: dir.path().join("imp"),
            seed: Some(index),
            ..Default::default()
        };
        armwise_cli::commands::importance::run(&args).unwrap();

        let report: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("imp/importance_report.json")).unwrap(),
        )
        .unwrap();
        let arm1_panel = report["panels"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["arm"] == 1 && p["target"] == "continuous-delta")
            .expect("arm-1 continuous panel");
        if arm1_panel["entries"][0]["feature"] == "f03" {
            top_hits += 1;
        }
    }
    check(
        7,
        top_hits >= 18,
        format!("f03 ranked first for the arm-1 model in {top_hits}/20 seeds (need ≥18)"),
    );
}

// ── 8. Exact micro-oracles ──────────────────────────────────────────────

#[test]
fn criterion_08_micro_oracles() {
    const TOL: f64 = 1e-9;
    let mut failures = Vec::new();

    // ate: arm-1 {−1.0, −0.5}, arm-0 {0.0, 0.5} → −1.0.
    let res = ate(
        "x",
        &[-1.0, -0.5, 0.0, 0.5],
        &[Arm::Arm1, Arm::Arm1, Arm::Arm0, Arm::Arm0],
        &AteOptions { bootstrap: 0, permutations: 0, seed: 0 },
    )
    .unwrap();
    if (res.ate - (-1.0)).abs() > TOL {
        failures.push(format!("ate {} != -1", res.ate));
    }

    // policy_value: arms [0,1,0,1], outcomes [−10,−2,3,−8], policy
    // [0,0,1,1] → matched 2, mean −9.
    let policy = Policy {
        assignments: vec![Arm::Arm0, Arm::Arm0, Arm::Arm1, Arm::Arm1],
        provenance: Provenance::Constant { arm: Arm::Arm0 },
        scores: None,
        fold_of: None,
    };
    let value = policy_value(
        &policy,
        &[Arm::Arm0, Arm::Arm1, Arm::Arm0, Arm::Arm1],
        &[-10.0, -2.0, 3.0, -8.0],
        &[None; 4],
    )
    .unwrap();
    if value.matched_count != 2 {
        failures.push(format!("matched {} != 2", value.matched_count));
    }
    if (value.mean_outcome.unwrap() - (-9.0)).abs() > TOL {
        failures.push(format!("mean_outcome {:?} != -9", value.mean_outcome));
    }

    // assign: lower severity delta wins, ties to arm 0.
    let assigned = assign(
        &CounterfactualScores {
            arm0: vec![-0.5, 1.0, 0.3],
            arm1: vec![0.2, -1.0, 0.3],
            lower_is_better: true,
        },
        Provenance::Oracle,
    );
    if assigned.assignments != vec![Arm::Arm0, Arm::Arm1, Arm::Arm0] {
        failures.push(format!("assign gave {:?}", assigned.assignments));
    }

    // standardize: [1,2,3] → ±√1.5 (population std), [−1,1] → [−1,1].
    let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![2.0, f64::NAN], vec![3.0, 1.0]]);
    let out = armwise::cohort::standardize(&m, &["a".into(), "b".into()]).unwrap();
    let a = out.column("a").unwrap();
    let b = out.column("b").unwrap();
    let root = 1.5f64.sqrt();
    for (got, want) in a.iter().zip([-root, 0.0, root]) {
        if (got - want).abs() > TOL {
            failures.push(format!("standardize a {a:?} != ±√1.5"));
            break;
        }
    }
    if (b[0] - (-1.0)).abs() > TOL || (b[2] - 1.0).abs() > TOL || !b[1].is_nan() {
        failures.push(format!("standardize b {b:?} != [-1, NaN, 1]"));
    }

    check(
        8,
        failures.is_empty(),
        if failures.is_empty() {
            "ate, policy_value, assign, standardize reproduce hand values to 1e-9".into()
        } else {
            failures.join("; ")
        },
    );
}

// ── 9. Byte determinism across thread counts ────────────────────────────

fn run_pipeline(dir: &Path, threads: &str) {
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_armwise"))
            .current_dir(dir)
            .env("RAYON_NUM_THREADS", threads)
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&[
        "simulate", "--output-dir", "sim", "--n-patients", "100", "--seed", "3", "--tau=-1",
        "--noise-sd", "1",
    ]);
    run(&[
        "ate", "--input", "sim/cohort.csv", "--output-dir", "ate", "--bootstrap", "400",
        "--permutations", "400",
    ]);
    run(&[
        "policy", "--input", "sim/cohort.csv", "--oracle", "sim/oracle.json", "--output-dir",
        "pol", "--random-draws", "300",
    ]);
    run(&[
        "plot-data", "--input", "sim/cohort.csv", "--output-dir", "pd", "--random-draws", "300",
    ]);
}

fn tree_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    files
}

#[test]
fn criterion_09_byte_determinism() {
    let wide = tempfile::tempdir().unwrap();
    let narrow = tempfile::tempdir().unwrap();
    run_pipeline(wide.path(), "4");
    run_pipeline(narrow.path(), "1");

    let files = tree_files(wide.path());
    let mut pass = files == tree_files(narrow.path());
    let mut mismatch = String::new();
    if pass {
        for rel in &files {
            if std::fs::read(wide.path().join(rel)).unwrap()
                != std::fs::read(narrow.path().join(rel)).unwrap()
            {
                pass = false;
                mismatch = format!(" (first mismatch: {})", rel.display());
                break;
            }
        }
    } else {
        mismatch = " (file sets differ)".into();
    }
    check(
        9,
        pass,
        format!(
            "{} output files byte-identical between 4-thread and 1-thread runs of simulate/ate/policy/plot-data{mismatch}",
            files.len()
        ),
    );
}

// ── 10. Report shape ────────────────────────────────────────────────────

#[test]
fn criterion_10_report_shape() {
    let trial = generate(&scenario(
        80,
        EffectModel::Constant { tau: -2.0 },
        1.0,
        47_000,
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cohort.csv");
    armwise::cohort::save_cohort(&input, &trial.cohort, &Default::default()).unwrap();

    let shared = |out: &str| SharedArgs {
        input: Some(input.clone()),
        output_dir: dir.path().join(out),
        bootstrap: Some(300),
        permutations: Some(300),
        random_draws: Some(200),
        ..Default::default()
    };
    armwise_cli::commands::ate::run(&shared("ate")).unwrap();
    armwise_cli::commands::policy::run(&shared("pol")).unwrap();

    let mut failures = Vec::new();

    let ate_report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("ate/ate_report.json")).unwrap(),
    )
    .unwrap();
    let rows = ate_report["rows"].as_array().unwrap();
    for field in ["ate", "ci_low", "ci_high", "p_value"] {
        if !rows.iter().all(|r| r[field].is_number()) {
            failures.push(format!("ate rows missing numeric {field}"));
        }
    }
    let outcomes: Vec<&str> = rows.iter().map(|r| r["outcome"].as_str().unwrap()).collect();
    if !outcomes.contains(&"pec") || !outcomes.contains(&"remission") {
        failures.push(format!("ate outcomes {outcomes:?} lack pec/remission"));
    }

    let policy_report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("pol/policy_report.json")).unwrap(),
    )
    .unwrap();
    let rows = policy_report["rows"].as_array().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    let families: Vec<&str> = rows.iter().map(|r| r["family"].as_str().unwrap()).collect();
    for label in ["1FED", "6FED"] {
        if !labels.contains(&label) {
            failures.push(format!("policy labels {labels:?} lack {label}"));
        }
    }
    for family in [
        "random",
        "threshold-in-sample",
        "threshold-out-of-fold",
        "s-learner",
        "t-learner",
    ] {
        if !families.contains(&family) {
            failures.push(format!("policy families lack {family}"));
        }
    }
    for band in ["outcome_band", "effectiveness_band"] {
        if !policy_report["random"][band].is_object() {
            failures.push(format!("random block lacks {band}"));
        }
    }

    check(
        10,
        failures.is_empty(),
        if failures.is_empty() {
            "ate report carries Table-1 fields; policy report carries every Table-2 row family plus the random band"
                .into()
        } else {
            failures.join("; ")
        },
    );
}
