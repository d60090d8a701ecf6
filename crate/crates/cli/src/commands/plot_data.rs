//! `plot-data`: delimiter-separated tables for external plotting — the
//! full threshold sweep curve, every random draw, and histograms of the
//! draw statistics.

use std::path::Path;

use armwise::evaluation::{random_policy_distribution, threshold_policy_sweep};
use armwise::ThresholdValue;

use crate::{commands, config, CliError, SharedArgs};

const SEED_DOMAINS: [&str; 2] = ["policy.random", "policy.random-draw"];

pub fn run(args: &SharedArgs) -> Result<(), CliError> {
    let config = config::resolve(args, "plot-data")?;
    let cohort = commands::load_input(&config)?;
    let arms = cohort.arms();
    let canonical = cohort.canonical_order();
    let remission = cohort.remission_labels();
    let target = config.outcome_columns[0].clone();
    let raw = commands::raw_outcome_column(&cohort, &target)?;
    let start = commands::start_column(&cohort, &target)?;

    let sweep = threshold_policy_sweep(&target, &start, &arms, &raw, &remission)
        .map_err(|e| CliError::from(armwise::Error::from(e)))?;
    let dist = random_policy_distribution(
        &canonical,
        &arms,
        &raw,
        &remission,
        config.random_draws,
        config.seed,
    );

    commands::prepare_output_dir(&config)?;
    let dir = &config.output_dir;

    write_csv(dir, "threshold_curve.csv", |w| {
        w.write_record([
            "feature",
            "threshold",
            "high_arm",
            "matched_count",
            "mean_outcome",
            "effectiveness",
        ])?;
        for c in &sweep.curve {
            w.write_record([
                sweep.feature.clone(),
                threshold_text(c.threshold),
                c.high_arm.index().to_string(),
                c.value.matched_count.to_string(),
                optional_text(c.value.mean_outcome),
                optional_text(c.value.effectiveness),
            ])?;
        }
        Ok(())
    })?;

    write_csv(dir, "random_draws.csv", |w| {
        w.write_record(["draw", "matched_count", "mean_outcome", "effectiveness"])?;
        for d in &dist.draws {
            w.write_record([
                d.draw.to_string(),
                d.matched_count.to_string(),
                optional_text(d.mean_outcome),
                optional_text(d.effectiveness),
            ])?;
        }
        Ok(())
    })?;

    let outcomes: Vec<f64> = dist.draws.iter().filter_map(|d| d.mean_outcome).collect();
    let effectiveness: Vec<f64> = dist.draws.iter().filter_map(|d| d.effectiveness).collect();
    write_histogram(dir, "outcome_hist.csv", &outcomes)?;
    write_histogram(dir, "effectiveness_hist.csv", &effectiveness)?;

    commands::write_manifest(&config, &SEED_DOMAINS)?;
    println!(
        "wrote threshold_curve.csv ({} candidates), random_draws.csv ({} draws), and histograms to {}",
        sweep.curve.len(),
        dist.draws.len(),
        dir.display()
    );
    Ok(())
}

fn threshold_text(t: ThresholdValue) -> String {
    match t {
        ThresholdValue::NegInf => "-inf".to_string(),
        ThresholdValue::PosInf => "inf".to_string(),
        ThresholdValue::Value(v) => format!("{v}"),
    }
}

fn optional_text(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

fn write_csv(
    dir: &Path,
    name: &str,
    fill: impl FnOnce(&mut csv::Writer<std::fs::File>) -> Result<(), csv::Error>,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let fail = |e: String| CliError::Failure(format!("cannot write {}: {e}", path.display()));
    let mut writer = csv::Writer::from_path(&path).map_err(|e| fail(e.to_string()))?;
    fill(&mut writer).map_err(|e| fail(e.to_string()))?;
    writer.flush().map_err(|e| fail(e.to_string()))?;
    Ok(())
}

/// Fixed 20-bin histogram over the value range; a degenerate range
/// collapses to a single bin.
fn write_histogram(dir: &Path, name: &str, values: &[f64]) -> Result<(), CliError> {
    const BINS: usize = 20;
    write_csv(dir, name, |w| {
        w.write_record(["bin_low", "bin_high", "count"])?;
        if values.is_empty() {
            return Ok(());
        }
        let low = values.iter().copied().fold(f64::INFINITY, f64::min);
        let high = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if low == high {
            w.write_record([format!("{low}"), format!("{high}"), values.len().to_string()])?;
            return Ok(());
        }
        let width = (high - low) / BINS as f64;
        let mut counts = [0usize; BINS];
        for &v in values {
            let bin = (((v - low) / width) as usize).min(BINS - 1);
            counts[bin] += 1;
        }
        for (b, count) in counts.iter().enumerate() {
            let bin_high = if b + 1 == BINS {
                high
            } else {
                low + width * (b + 1) as f64
            };
            w.write_record([
                format!("{}", low + width * b as f64),
                format!("{bin_high}"),
                count.to_string(),
            ])?;
        }
        Ok(())
    })
}
