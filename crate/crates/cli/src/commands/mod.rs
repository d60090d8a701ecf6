//! One module per subcommand, plus the file and cohort plumbing they
//! share.

pub mod ate;
pub mod importance;
pub mod plot_data;
pub mod policy;
pub mod simulate;

use std::path::Path;

use armwise::{Cohort, FoldPlan};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::RunManifest;
use crate::CliError;

pub(crate) fn load_input(config: &RunConfig) -> Result<Cohort, CliError> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Validation("--input is required for this command".into()))?;
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "input file not found: {}",
            path.display()
        )));
    }
    armwise::cohort::load_cohort(path, &config.format)
        .map_err(|e| armwise::Error::from(e).into())
}

pub(crate) fn prepare_output_dir(config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| {
        CliError::Failure(format!(
            "cannot create output dir {}: {e}",
            config.output_dir.display()
        ))
    })
}

pub(crate) fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Failure(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_manifest(config: &RunConfig, seed_domains: &[&str]) -> Result<(), CliError> {
    write_json(
        &config.output_dir,
        "run_manifest.json",
        &RunManifest::new(config, seed_domains),
    )
}

/// Raw (unstandardized) outcome delta column for one feature.
pub(crate) fn raw_outcome_column(cohort: &Cohort, feature: &str) -> Result<Vec<f64>, CliError> {
    let j = feature_index(cohort, feature)?;
    let deltas = armwise::cohort::outcome_deltas(cohort)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    Ok(deltas.column(j))
}

/// Baseline (start) values for one feature, the threshold sweep's input.
pub(crate) fn start_column(cohort: &Cohort, feature: &str) -> Result<Vec<f64>, CliError> {
    let j = feature_index(cohort, feature)?;
    Ok(cohort.start_matrix().column(j))
}

fn feature_index(cohort: &Cohort, feature: &str) -> Result<usize, CliError> {
    cohort.schema.index_of(feature).ok_or_else(|| {
        CliError::Validation(format!(
            "outcome column {feature:?} is not in the cohort (features: {})",
            cohort.schema.names.join(", ")
        ))
    })
}

pub(crate) fn fold_plan(cohort: &Cohort, config: &RunConfig) -> Result<FoldPlan, CliError> {
    FoldPlan::derive(cohort, config.folds, config.stratified)
        .map_err(|e| CliError::from(armwise::Error::from(e)))
}
