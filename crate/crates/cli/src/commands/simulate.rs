//! `simulate`: generate a synthetic trial and persist both views, the
//! factual cohort (what the analysis commands see) and the ground-truth
//! sidecar (what the oracle comparisons consume).

use crate::{commands, config, CliError, SimulateArgs};

const SEED_DOMAINS: [&str; 6] = [
    "synthetic.pec",
    "synthetic.features",
    "synthetic.arm",
    "synthetic.noise",
    "synthetic.drift",
    "synthetic.missing",
];

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let mut config = config::resolve(&args.shared, "simulate")?;
    let spec = config::resolve_scenario(args, &config);
    let generated =
        armwise::synthetic::generate(&spec).map_err(|e| CliError::from(armwise::Error::from(e)))?;

    // The manifest echoes the scenario as resolved, not as configured.
    config.scenario = Some(spec.clone());

    commands::prepare_output_dir(&config)?;
    armwise::cohort::save_cohort(
        &config.output_dir.join("cohort.csv"),
        &generated.cohort,
        &config.format,
    )
    .map_err(|e| CliError::Failure(format!("cannot write cohort.csv: {e}")))?;
    commands::write_json(&config.output_dir, "oracle.json", &generated.truth(&spec))?;
    commands::write_manifest(&config, &SEED_DOMAINS)?;

    println!(
        "simulated {} patients ({} arm 0, {} arm 1) into {}",
        generated.cohort.n_patients(),
        generated.cohort.arm_count(armwise::Arm::Arm0),
        generated.cohort.arm_count(armwise::Arm::Arm1),
        config.output_dir.display()
    );
    Ok(())
}
