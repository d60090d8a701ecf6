//! `policy`: score every policy family on the same cohort and outcome,
//! calibrated against the seeded random-policy distribution.
//!
//! Rows, in order: both constant policies, the random reference, the
//! in-sample threshold sweep, the out-of-fold threshold rule, one row
//! per grid model (out-of-fold), and the oracle policy when a sidecar
//! is supplied.

use std::path::Path;

use armwise::evaluation::{
    constant_policy, out_of_fold_threshold_sweep, policy_value, random_policy_distribution,
    threshold_policy_sweep, PolicyValueResult, RandomPolicyDistribution,
};
use armwise::synthetic::true_policy_value;
use armwise::{Arm, Cohort, OracleCohort, OracleTruth, Policy};

use crate::report::{render_policy_text, PolicyReport, PolicyRow};
use crate::{commands, config, CliError, SharedArgs};

const SEED_DOMAINS: [&str; 4] = [
    "policy.random",
    "policy.random-draw",
    "boosted.subsample",
    "feedforward.init",
];

pub fn run(args: &SharedArgs) -> Result<(), CliError> {
    let config = config::resolve(args, "policy")?;
    let cohort = commands::load_input(&config)?;
    let n = cohort.n_patients();
    let arms = cohort.arms();
    let canonical = cohort.canonical_order();
    let remission = cohort.remission_labels();
    let target = config.outcome_columns[0].clone();
    let raw = commands::raw_outcome_column(&cohort, &target)?;
    let start = commands::start_column(&cohort, &target)?;
    let plan = commands::fold_plan(&cohort, &config)?;

    let oracle = match &config.oracle {
        Some(path) => Some(load_oracle(path, &cohort)?),
        None => None,
    };
    let truth_of = |policy: &Policy| oracle.as_ref().map(|o| true_policy_value(policy, o));

    let dist = random_policy_distribution(
        &canonical,
        &arms,
        &raw,
        &remission,
        config.random_draws,
        config.seed,
    );
    let evaluate = |policy: &Policy| -> Result<PolicyValueResult, CliError> {
        let mut value = policy_value(policy, &arms, &raw, &remission)
            .map_err(|e| CliError::from(armwise::Error::from(e)))?;
        dist.calibrate(&mut value);
        Ok(value)
    };

    let mut rows: Vec<PolicyRow> = Vec::new();
    let mut exported: Vec<(String, Policy)> = Vec::new();

    for (arm, label) in [(Arm::Arm0, "1FED"), (Arm::Arm1, "6FED")] {
        let policy = constant_policy(n, arm);
        let mut row = PolicyRow::from_value("constant", label.to_string(), &evaluate(&policy)?);
        row.true_value = truth_of(&policy);
        rows.push(row);
    }

    rows.push(random_row(&dist, oracle.as_ref()));

    let sweep = threshold_policy_sweep(&target, &start, &arms, &raw, &remission)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let mut best_value = sweep.best_value.clone();
    dist.calibrate(&mut best_value);
    let mut row = PolicyRow::from_value(
        "threshold-in-sample",
        sweep.best.provenance.label(),
        &best_value,
    );
    row.optimistically_biased = true;
    row.true_value = truth_of(&sweep.best);
    rows.push(row);

    let oof = out_of_fold_threshold_sweep(&target, &start, &arms, &raw, &remission, &plan)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let mut row = PolicyRow::from_value(
        "threshold-out-of-fold",
        oof.provenance.label(),
        &evaluate(&oof)?,
    );
    row.true_value = truth_of(&oof);
    rows.push(row);
    exported.push(("threshold-out-of-fold".to_string(), oof));

    let mut grid_indices = Vec::new();
    for spec in &config.models {
        let policy =
            armwise::evaluation::cross_validated_policy(spec, &cohort, &plan, config.standardize)
                .map_err(CliError::from)?;
        let mut row = PolicyRow::from_value(
            spec.kind.name(),
            policy.provenance.label(),
            &evaluate(&policy)?,
        );
        row.true_value = truth_of(&policy);
        grid_indices.push(rows.len());
        rows.push(row);
        exported.push((spec.kind.name().to_string(), policy));
    }
    mark_selected(&mut rows, &grid_indices);

    if let Some(o) = &oracle {
        let mut row = PolicyRow::from_value("oracle", "oracle".to_string(), &evaluate(&o.oracle_policy)?);
        row.true_value = Some(o.oracle_value);
        rows.push(row);
    }

    let report = PolicyReport {
        outcome: target,
        n_patients: n,
        folds: config.folds,
        rows,
        random: dist,
    };

    commands::prepare_output_dir(&config)?;
    commands::write_json(&config.output_dir, "policy_report.json", &report)?;
    commands::write_text(
        &config.output_dir,
        "policy_report.txt",
        &render_policy_text(&report),
    )?;
    write_assignments(&config.output_dir, &cohort, &exported)?;
    commands::write_manifest(&config, &SEED_DOMAINS)?;

    print!("{}", render_policy_text(&report));
    Ok(())
}

fn load_oracle(path: &Path, cohort: &Cohort) -> Result<OracleCohort, CliError> {
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "oracle file not found: {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read oracle {}: {e}", path.display())))?;
    let truth: OracleTruth = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad oracle {}: {e}", path.display())))?;
    OracleCohort::from_parts(cohort.clone(), &truth)
        .map_err(|e| CliError::from(armwise::Error::from(e)))
}

/// The random family's table row: per-draw medians. The full band and
/// every draw live in the report's `random` block.
fn random_row(dist: &RandomPolicyDistribution, oracle: Option<&OracleCohort>) -> PolicyRow {
    let mut matched: Vec<usize> = dist.draws.iter().map(|d| d.matched_count).collect();
    matched.sort_unstable();
    let mean_outcome = dist.outcome_band.map(|b| b.q50);
    PolicyRow {
        family: "random".to_string(),
        label: format!("random/seed{}", dist.seed),
        matched_count: matched.get(matched.len() / 2).copied().unwrap_or(0),
        mean_outcome,
        mean_decrease: mean_outcome.map(|v| -v),
        effectiveness: dist.effectiveness_band.map(|b| b.q50),
        empirical_p: None,
        degenerate: dist.draws.is_empty(),
        optimistically_biased: false,
        selected: false,
        threshold: None,
        high_arm: None,
        // A uniform coin gets each patient's mean potential outcome.
        true_value: oracle.map(|o| {
            let total: f64 = o.y0.iter().zip(&o.y1).map(|(a, b)| (a + b) / 2.0).sum();
            total / o.y0.len() as f64
        }),
    }
}

/// Flag the grid row with the best out-of-fold value: highest
/// effectiveness, ties to lower mean outcome, then grid order. With
/// several candidates the winning value is itself selection-biased.
fn mark_selected(rows: &mut [PolicyRow], grid_indices: &[usize]) {
    let better = |a: &PolicyRow, b: &PolicyRow| -> bool {
        match (a.effectiveness, b.effectiveness) {
            (Some(x), Some(y)) if x != y => x > y,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            _ => match (a.mean_outcome, b.mean_outcome) {
                (Some(x), Some(y)) => x < y,
                (Some(_), None) => true,
                _ => false,
            },
        }
    };
    let mut best: Option<usize> = None;
    for &i in grid_indices {
        if best.is_none_or(|b| better(&rows[i], &rows[b])) {
            best = Some(i);
        }
    }
    if let Some(i) = best {
        rows[i].selected = true;
        if grid_indices.len() > 1 {
            rows[i].optimistically_biased = true;
        }
    }
}

/// Per-patient out-of-fold assignments for the exported policies, one
/// row per (policy, patient). Score cells are empty for rule-based
/// policies and for missing counterfactual scores.
fn write_assignments(
    dir: &Path,
    cohort: &Cohort,
    exported: &[(String, Policy)],
) -> Result<(), CliError> {
    let path = dir.join("assignments.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    let fail = |e: csv::Error| CliError::Failure(format!("cannot write assignments.csv: {e}"));

    writer
        .write_record(["model", "id", "fold", "assigned_arm", "score_arm0", "score_arm1"])
        .map_err(fail)?;
    for (model, policy) in exported {
        for (i, patient) in cohort.patients.iter().enumerate() {
            let fold = policy
                .fold_of
                .as_ref()
                .map_or(String::new(), |f| f[i].to_string());
            let score = |column: fn(&armwise::CounterfactualScores) -> &Vec<f64>| {
                policy.scores.as_ref().map_or(String::new(), |s| {
                    let v = column(s)[i];
                    if v.is_nan() {
                        String::new()
                    } else {
                        format!("{v}")
                    }
                })
            };
            writer
                .write_record([
                    model.clone(),
                    patient.id.clone(),
                    fold,
                    policy.assignments[i].index().to_string(),
                    score(|s| &s.arm0),
                    score(|s| &s.arm1),
                ])
                .map_err(fail)?;
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::Failure(format!("cannot write assignments.csv: {e}")))?;
    Ok(())
}
