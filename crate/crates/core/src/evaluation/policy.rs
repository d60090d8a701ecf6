//! Factual-matching policy value and the random-policy reference
//! distribution.
//!
//! In a randomized trial the patients whose coin flip happens to agree
//! with a policy are a random subsample, so their average outcome is an
//! unbiased estimate of the outcome under that policy. `policy_value`
//! performs exactly that filter-and-average; `random_policy_distribution`
//! calibrates any candidate against many seeded coin-flip policies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::Arm;
use crate::error::EvalError;
use crate::meta::{Policy, Provenance};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValueResult {
    pub provenance: Provenance,
    /// Patients whose randomized arm equals the policy arm.
    pub matched_count: usize,
    /// Mean raw outcome over matched patients with a non-missing outcome.
    pub mean_outcome: Option<f64>,
    /// Remission fraction over matched patients with a known label.
    pub effectiveness: Option<f64>,
    /// True when no patient matched; the statistics are then absent.
    pub degenerate: bool,
    /// Fraction of random draws at least as good, when calibrated against
    /// a [`RandomPolicyDistribution`].
    pub empirical_p: Option<f64>,
}

/// Estimate a policy's value by factual matching.
///
/// `outcomes` is a raw (unstandardized) outcome column; `remission` holds
/// per-patient binary labels where known. Both statistics are computed
/// only over matched patients, skipping missing entries.
pub fn policy_value(
    policy: &Policy,
    arms: &[Arm],
    outcomes: &[f64],
    remission: &[Option<u8>],
) -> Result<PolicyValueResult, EvalError> {
    if policy.len() != arms.len() {
        return Err(EvalError::PolicyCohortMismatch {
            policy: policy.len(),
            cohort: arms.len(),
        });
    }
    assert_eq!(arms.len(), outcomes.len(), "outcome column length mismatch");
    assert_eq!(arms.len(), remission.len(), "remission column length mismatch");

    let matched: Vec<usize> = (0..arms.len())
        .filter(|&i| arms[i] == policy.assignments[i])
        .collect();
    let matched_outcomes: Vec<f64> = matched
        .iter()
        .map(|&i| outcomes[i])
        .filter(|v| !v.is_nan())
        .collect();
    let labels: Vec<f64> = matched
        .iter()
        .filter_map(|&i| remission[i].map(f64::from))
        .collect();
    Ok(PolicyValueResult {
        provenance: policy.provenance.clone(),
        matched_count: matched.len(),
        mean_outcome: stats::stable_mean(&matched_outcomes),
        effectiveness: stats::stable_mean(&labels),
        degenerate: matched.is_empty(),
        empirical_p: None,
    })
}

/// Everyone gets the same arm.
pub fn constant_policy(n_patients: usize, arm: Arm) -> Policy {
    Policy {
        assignments: vec![arm; n_patients],
        provenance: Provenance::Constant { arm },
        scores: None,
        fold_of: None,
    }
}

/// One independent fair coin per patient. Coins are dealt in id-sorted
/// order (`canonical_order`), so the same seed gives the same arm to the
/// same patient no matter how the cohort rows are arranged.
pub fn random_policy(canonical_order: &[usize], seed: u64) -> Policy {
    let mut assignments = vec![Arm::Arm0; canonical_order.len()];
    let mut coin_rng = rng::derive_rng(seed, "policy.random", 0);
    for &idx in canonical_order {
        assignments[idx] = if coin_rng.gen_bool(0.5) {
            Arm::Arm1
        } else {
            Arm::Arm0
        };
    }
    Policy {
        assignments,
        provenance: Provenance::Random { seed },
        scores: None,
        fold_of: None,
    }
}

/// 2.5 / 50 / 97.5 percentiles of a draw statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl Band {
    fn over(values: &[f64]) -> Option<Band> {
        Some(Band {
            q025: stats::quantile(values, 0.025)?,
            q50: stats::quantile(values, 0.5)?,
            q975: stats::quantile(values, 0.975)?,
        })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.q025 <= v && v <= self.q975
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub draw: usize,
    pub matched_count: usize,
    pub mean_outcome: Option<f64>,
    pub effectiveness: Option<f64>,
}

/// The empirical distribution of random-policy values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPolicyDistribution {
    pub n_draws: usize,
    pub seed: u64,
    pub draws: Vec<DrawSummary>,
    /// Bands over per-draw statistics (the primary calibration bands).
    pub outcome_band: Option<Band>,
    pub effectiveness_band: Option<Band>,
    /// Band over the pooled matched patient outcomes of all draws, an
    /// alternative patient-level reading of the reference interval.
    pub pooled_outcome_band: Option<Band>,
    /// Remission fraction over the pooled matched patients of all draws.
    pub pooled_effectiveness: Option<f64>,
}

/// Evaluate `n_draws` seeded random policies against the cohort.
pub fn random_policy_distribution(
    canonical_order: &[usize],
    arms: &[Arm],
    outcomes: &[f64],
    remission: &[Option<u8>],
    n_draws: usize,
    seed: u64,
) -> RandomPolicyDistribution {
    let per_draw: Vec<(DrawSummary, Vec<f64>, Vec<f64>)> = (0..n_draws)
        .into_par_iter()
        .map(|d| {
            let draw_seed = rng::derive_seed(seed, "policy.random-draw", d as u64);
            let policy = random_policy(canonical_order, draw_seed);
            let matched: Vec<usize> = (0..arms.len())
                .filter(|&i| arms[i] == policy.assignments[i])
                .collect();
            let outcome_vals: Vec<f64> = matched
                .iter()
                .map(|&i| outcomes[i])
                .filter(|v| !v.is_nan())
                .collect();
            let labels: Vec<f64> = matched
                .iter()
                .filter_map(|&i| remission[i].map(f64::from))
                .collect();
            let summary = DrawSummary {
                draw: d,
                matched_count: matched.len(),
                mean_outcome: stats::stable_mean(&outcome_vals),
                effectiveness: stats::stable_mean(&labels),
            };
            (summary, outcome_vals, labels)
        })
        .collect();

    let mut draws = Vec::with_capacity(n_draws);
    let mut pooled_outcomes = Vec::new();
    let mut pooled_labels = Vec::new();
    for (summary, outcome_vals, labels) in per_draw {
        draws.push(summary);
        pooled_outcomes.extend(outcome_vals);
        pooled_labels.extend(labels);
    }
    let outcome_means: Vec<f64> = draws.iter().filter_map(|d| d.mean_outcome).collect();
    let effectiveness_vals: Vec<f64> = draws.iter().filter_map(|d| d.effectiveness).collect();

    RandomPolicyDistribution {
        n_draws,
        seed,
        outcome_band: Band::over(&outcome_means),
        effectiveness_band: Band::over(&effectiveness_vals),
        pooled_outcome_band: Band::over(&pooled_outcomes),
        pooled_effectiveness: stats::stable_mean(&pooled_labels),
        draws,
    }
}

impl RandomPolicyDistribution {
    /// Add-one-smoothed fraction of draws whose effectiveness is at least
    /// the candidate's ("at least as good": higher remission).
    pub fn empirical_p_effectiveness(&self, candidate: f64) -> f64 {
        let at_least = self
            .draws
            .iter()
            .filter(|d| d.effectiveness.is_some_and(|e| e >= candidate))
            .count();
        (1 + at_least) as f64 / (self.n_draws + 1) as f64
    }

    /// Add-one-smoothed fraction of draws whose mean outcome is at most
    /// the candidate's ("at least as good": lower severity delta).
    pub fn empirical_p_outcome(&self, candidate: f64) -> f64 {
        let at_least = self
            .draws
            .iter()
            .filter(|d| d.mean_outcome.is_some_and(|m| m <= candidate))
            .count();
        (1 + at_least) as f64 / (self.n_draws + 1) as f64
    }

    /// Attach the effectiveness-based empirical p to a candidate result
    /// (falling back to the outcome-based p when no label was available).
    pub fn calibrate(&self, result: &mut PolicyValueResult) {
        result.empirical_p = match (result.effectiveness, result.mean_outcome) {
            (Some(e), _) => Some(self.empirical_p_effectiveness(e)),
            (None, Some(m)) => Some(self.empirical_p_outcome(m)),
            (None, None) => None,
        };
    }
}
