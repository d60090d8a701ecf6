//! Report documents: machine-readable JSON first, text tables rendered
//! from the same structs.

use armwise::{
    AteResult, Arm, PolicyValueResult, Provenance, ThresholdValue,
    evaluation::RandomPolicyDistribution,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Written once per run as `run_manifest.json`: enough to reproduce the
/// run exactly. Deliberately timestamp-free so reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub versions: Versions,
    pub seed: u64,
    /// RNG stream labels the command may consume under the master seed.
    pub seed_domains: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub armwise: String,
    pub cli: String,
}

impl RunManifest {
    pub fn new(config: &RunConfig, seed_domains: &[&str]) -> Self {
        RunManifest {
            command: config.command.clone(),
            versions: Versions {
                armwise: armwise::VERSION.to_string(),
                cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            seed: config.seed,
            seed_domains: seed_domains.iter().map(|s| s.to_string()).collect(),
            config: config.clone(),
        }
    }
}

// ── ATE ─────────────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct AteReport {
    pub rows: Vec<AteRow>,
    /// Outcome columns that could not be analyzed, with the reason.
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct AteRow {
    pub outcome: String,
    /// "standardized delta" for feature columns, "proportion" for the
    /// remission row.
    pub units: String,
    pub ate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub n_arm0: usize,
    pub n_arm1: usize,
}

impl AteRow {
    pub fn from_result(res: AteResult, units: &str) -> Self {
        AteRow {
            outcome: res.feature,
            units: units.to_string(),
            ate: res.ate,
            ci_low: res.ci_low,
            ci_high: res.ci_high,
            p_value: res.p_value,
            n_arm0: res.n_arm0,
            n_arm1: res.n_arm1,
        }
    }
}

pub fn render_ate_text(report: &AteReport) -> String {
    let mut out = String::new();
    out.push_str("Average treatment effect (arm 1 minus arm 0)\n\n");
    out.push_str(&format!(
        "{:<12} {:<19} {:>10} {:>22} {:>8} {:>6} {:>6}\n",
        "outcome", "units", "ATE", "95% CI", "p", "n0", "n1"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<12} {:<19} {:>10.4} [{:>9.4}, {:>9.4}] {:>8.4} {:>6} {:>6}\n",
            row.outcome,
            row.units,
            row.ate,
            row.ci_low,
            row.ci_high,
            row.p_value,
            row.n_arm0,
            row.n_arm1
        ));
    }
    for warning in &report.warnings {
        out.push_str(&format!("\nwarning: {warning}\n"));
    }
    out
}

// ── Policy value ────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct PolicyReport {
    /// Outcome column the policies are scored on, in raw units.
    pub outcome: String,
    pub n_patients: usize,
    pub folds: usize,
    pub rows: Vec<PolicyRow>,
    /// The full random-policy reference distribution, draws included, so
    /// significance claims ship with their reference.
    pub random: RandomPolicyDistribution,
}

#[derive(Debug, Serialize)]
pub struct PolicyRow {
    /// Row family: "constant", "random", "threshold-in-sample",
    /// "threshold-out-of-fold", "s-learner", "t-learner", "oracle".
    pub family: String,
    pub label: String,
    pub matched_count: usize,
    /// Mean raw outcome delta over matched patients (lower is better).
    pub mean_outcome: Option<f64>,
    /// Negated mean outcome, so severity reductions read as positive.
    pub mean_decrease: Option<f64>,
    /// Matched-remission fraction (higher is better).
    pub effectiveness: Option<f64>,
    pub empirical_p: Option<f64>,
    pub degenerate: bool,
    /// True for rows whose rule was chosen on the same data it is
    /// scored on (the in-sample threshold sweep, grid selection).
    pub optimistically_biased: bool,
    /// Marks the grid model with the best out-of-fold value.
    pub selected: bool,
    pub threshold: Option<ThresholdValue>,
    pub high_arm: Option<Arm>,
    /// Mean potential outcome under the policy, when an oracle sidecar
    /// was provided.
    pub true_value: Option<f64>,
}

impl PolicyRow {
    pub fn from_value(family: &str, label: String, value: &PolicyValueResult) -> Self {
        let (threshold, high_arm) = match &value.provenance {
            Provenance::Threshold {
                threshold, high_arm, ..
            } => (Some(*threshold), Some(*high_arm)),
            _ => (None, None),
        };
        PolicyRow {
            family: family.to_string(),
            label,
            matched_count: value.matched_count,
            mean_outcome: value.mean_outcome,
            mean_decrease: value.mean_outcome.map(|v| -v),
            effectiveness: value.effectiveness,
            empirical_p: value.empirical_p,
            degenerate: value.degenerate,
            optimistically_biased: false,
            selected: false,
            threshold,
            high_arm,
            true_value: None,
        }
    }
}

fn fmt_opt(v: Option<f64>, width: usize, precision: usize) -> String {
    match v {
        Some(v) => format!("{v:>width$.precision$}"),
        None => format!("{:>width$}", "-"),
    }
}

pub fn render_policy_text(report: &PolicyReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Policy value by factual matching — outcome \"{}\" (raw units), {} patients, {}-fold\n\n",
        report.outcome, report.n_patients, report.folds
    ));
    out.push_str(&format!(
        "{:<22} {:<34} {:>7} {:>10} {:>10} {:>8} {:>9}  flags\n",
        "family", "policy", "matched", "decrease", "effective", "emp. p", "true val"
    ));
    for row in &report.rows {
        let mut flags = Vec::new();
        if row.optimistically_biased {
            flags.push("in-sample");
        }
        if row.selected {
            flags.push("selected");
        }
        if row.degenerate {
            flags.push("degenerate");
        }
        out.push_str(&format!(
            "{:<22} {:<34} {:>7} {} {} {} {}  {}\n",
            row.family,
            row.label,
            row.matched_count,
            fmt_opt(row.mean_decrease, 10, 3),
            fmt_opt(row.effectiveness, 10, 3),
            fmt_opt(row.empirical_p, 8, 4),
            fmt_opt(row.true_value, 9, 3),
            flags.join(",")
        ));
    }

    let r = &report.random;
    out.push_str(&format!(
        "\nRandom-policy reference: {} draws, seed {}\n",
        r.n_draws, r.seed
    ));
    if let Some(band) = r.outcome_band {
        out.push_str(&format!(
            "  decrease band (2.5/50/97.5%):      [{:.3}, {:.3}, {:.3}]\n",
            -band.q975, -band.q50, -band.q025
        ));
    }
    if let Some(band) = r.effectiveness_band {
        out.push_str(&format!(
            "  effectiveness band (2.5/50/97.5%): [{:.3}, {:.3}, {:.3}]\n",
            band.q025, band.q50, band.q975
        ));
    }
    out
}

// ── Importance ──────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct ImportanceReport {
    pub learner: String,
    pub top_k: usize,
    pub panels: Vec<ImportancePanel>,
}

#[derive(Debug, Serialize)]
pub struct ImportancePanel {
    pub arm: Arm,
    /// Training target of the panel's model: "continuous-delta" or
    /// "binary-remission".
    pub target: String,
    pub entries: Vec<ImportanceEntry>,
    pub warning: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ImportanceEntry {
    pub feature: String,
    /// Fraction of total split gain attributed to the feature.
    pub gain_share: f64,
}

pub fn render_importance_text(report: &ImportanceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Per-arm feature importance (split gain shares), {} base, top {}\n",
        report.learner, report.top_k
    ));
    for panel in &report.panels {
        out.push_str(&format!(
            "\narm {} model, {} target\n",
            panel.arm.index(),
            panel.target
        ));
        match &panel.warning {
            Some(w) => out.push_str(&format!("  (empty: {w})\n")),
            None => {
                for (rank, e) in panel.entries.iter().enumerate() {
                    out.push_str(&format!(
                        "  {:>2}. {:<16} {:.4}\n",
                        rank + 1,
                        e.feature,
                        e.gain_share
                    ));
                }
            }
        }
    }
    out
}
