//! `ate`: average treatment effect per outcome column, standardized
//! units, plus a remission-proportion row when labels exist.

use armwise::evaluation::{ate, AteOptions};

use crate::report::{render_ate_text, AteReport, AteRow};
use crate::{commands, config, CliError, SharedArgs};

const SEED_DOMAINS: [&str; 2] = ["ate.bootstrap", "ate.permutation"];

pub fn run(args: &SharedArgs) -> Result<(), CliError> {
    let config = config::resolve(args, "ate")?;
    let cohort = commands::load_input(&config)?;
    let arms = cohort.arms();

    let deltas = armwise::cohort::outcome_deltas(&cohort)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let outcomes = armwise::cohort::standardize(&deltas, &cohort.schema.names)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;

    let opts = AteOptions {
        bootstrap: config.bootstrap,
        permutations: config.permutations,
        seed: config.seed,
    };

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for column in &config.outcome_columns {
        let z = outcomes.column(column).ok_or_else(|| {
            CliError::Validation(format!(
                "outcome column {column:?} is missing or was dropped as degenerate"
            ))
        })?;
        let res = ate(column, &z, &arms, &opts)
            .map_err(|e| CliError::from(armwise::Error::from(e)))?;
        rows.push(AteRow::from_result(res, "standardized delta"));
    }

    // Difference in remission proportions; skipped (with a note) when a
    // whole arm lacks labels.
    let labels: Vec<f64> = cohort
        .remission_labels()
        .iter()
        .map(|l| l.map_or(f64::NAN, f64::from))
        .collect();
    match ate("remission", &labels, &arms, &opts) {
        Ok(res) => rows.push(AteRow::from_result(res, "proportion")),
        Err(e) => warnings.push(format!("remission row skipped: {e}")),
    }

    let report = AteReport { rows, warnings };
    commands::prepare_output_dir(&config)?;
    commands::write_json(&config.output_dir, "ate_report.json", &report)?;
    commands::write_text(
        &config.output_dir,
        "ate_report.txt",
        &render_ate_text(&report),
    )?;
    commands::write_manifest(&config, &SEED_DOMAINS)?;

    print!("{}", render_ate_text(&report));
    Ok(())
}
