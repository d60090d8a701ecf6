//! `importance`: train per-arm models in-sample and rank features by
//! split gain. Four panels: each arm crossed with the continuous and
//! the remission training target.

use armwise::meta::{fit_meta, outcome_target};
use armwise::{Arm, LearnerSpec, MetaKind, MetaSpec, TargetMode};

use crate::report::{render_importance_text, ImportanceEntry, ImportancePanel, ImportanceReport};
use crate::{commands, config, CliError, SharedArgs};

const SEED_DOMAINS: [&str; 1] = ["boosted.subsample"];

pub fn run(args: &SharedArgs) -> Result<(), CliError> {
    let config = config::resolve(args, "importance")?;
    let base = config.models[0].base.clone();
    if !matches!(base, LearnerSpec::Tree(_) | LearnerSpec::BoostedTrees(_)) {
        return Err(CliError::Validation(format!(
            "feature importance needs a tree-kind base learner; got \"{}\"",
            base.kind_name()
        )));
    }

    let cohort = commands::load_input(&config)?;
    let features = cohort.start_matrix();
    let arms = cohort.arms();
    let target = config.outcome_columns[0].clone();

    let deltas = armwise::cohort::outcome_deltas(&cohort)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let standardized = armwise::cohort::standardize(&deltas, &cohort.schema.names)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let continuous = outcome_target(&standardized, &target)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let remission: Vec<f64> = cohort
        .remission_labels()
        .iter()
        .map(|l| l.map_or(f64::NAN, f64::from))
        .collect();

    let mut panels = Vec::new();
    for (mode, targets) in [
        (TargetMode::ContinuousDelta, &continuous),
        (TargetMode::BinaryRemission, &remission),
    ] {
        let spec = MetaSpec {
            kind: MetaKind::TLearner,
            base: base.clone(),
            target_feature: target.clone(),
            target_mode: mode,
        };
        let meta = fit_meta(&spec, &features, &arms, targets)
            .map_err(|e| CliError::from(armwise::Error::from(e)))?;
        for arm in [Arm::Arm0, Arm::Arm1] {
            let model = meta
                .arm_model(arm)
                .expect("a fitted t-learner carries both per-arm models");
            let gains = model
                .importance()
                .map_err(|e| CliError::from(armwise::Error::from(e)))?;
            panels.push(panel(arm, mode, &gains, &cohort.schema.names, config.top_k));
        }
    }

    let report = ImportanceReport {
        learner: base.kind_name().to_string(),
        top_k: config.top_k,
        panels,
    };
    commands::prepare_output_dir(&config)?;
    commands::write_json(&config.output_dir, "importance_report.json", &report)?;
    commands::write_text(
        &config.output_dir,
        "importance_report.txt",
        &render_importance_text(&report),
    )?;
    commands::write_manifest(&config, &SEED_DOMAINS)?;

    print!("{}", render_importance_text(&report));
    Ok(())
}

fn panel(
    arm: Arm,
    mode: TargetMode,
    gains: &[f64],
    names: &[String],
    top_k: usize,
) -> ImportancePanel {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let entries: Vec<ImportanceEntry> = order
        .into_iter()
        .take(top_k)
        .filter(|&j| gains[j] > 0.0)
        .map(|j| ImportanceEntry {
            feature: names[j].clone(),
            gain_share: gains[j],
        })
        .collect();
    let warning = entries
        .is_empty()
        .then(|| "the model made no splits; no gain to attribute".to_string());
    ImportancePanel {
        arm,
        target: match mode {
            TargetMode::ContinuousDelta => "continuous-delta".to_string(),
            TargetMode::BinaryRemission => "binary-remission".to_string(),
        },
        entries,
        warning,
    }
}
