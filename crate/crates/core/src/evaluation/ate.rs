//! Average treatment effect with bootstrap CI and permutation p-value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cohort::Arm;
use crate::error::EvalError;
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AteOptions {
    /// Bootstrap resamples for the percentile CI.
    pub bootstrap: usize,
    /// Label permutations for the two-sided p-value.
    pub permutations: usize,
    pub seed: u64,
}

impl Default for AteOptions {
    fn default() -> Self {
        AteOptions {
            bootstrap: 10_000,
            permutations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteResult {
    /// Outcome column the effect refers to.
    pub feature: String,
    /// mean(arm-1 outcomes) − mean(arm-0 outcomes).
    pub ate: f64,
    /// 95% bootstrap percentile bounds.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided, add-one-smoothed permutation p-value.
    pub p_value: f64,
    pub n_arm0: usize,
    pub n_arm1: usize,
}

/// Per-arm non-missing outcomes, canonically sorted so every downstream
/// draw and sum is independent of input row order.
fn split_arms(outcomes: &[f64], arms: &[Arm]) -> Result<[Vec<f64>; 2], EvalError> {
    assert_eq!(outcomes.len(), arms.len(), "outcome/arm length mismatch");
    let mut split: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (v, arm) in outcomes.iter().zip(arms) {
        if !v.is_nan() {
            split[arm.index()].push(*v);
        }
    }
    for (a, vals) in split.iter_mut().enumerate() {
        match vals.len() {
            0 => return Err(EvalError::EmptyArm(a as u8)),
            1 => return Err(EvalError::TooFewOutcomes { arm: a as u8, got: 1 }),
            _ => vals.sort_by(f64::total_cmp),
        }
    }
    Ok(split)
}

fn mean_of_sorted(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Estimate the ATE of one outcome column.
///
/// Missing outcomes are dropped per arm. The CI resamples each arm
/// independently (percentile method); the p-value permutes arm labels
/// over the pooled outcomes and counts |permuted ATE| ≥ |observed|.
pub fn ate(
    feature: &str,
    outcomes: &[f64],
    arms: &[Arm],
    opts: &AteOptions,
) -> Result<AteResult, EvalError> {
    let [arm0, arm1] = split_arms(outcomes, arms)?;
    let observed = mean_of_sorted(&arm1) - mean_of_sorted(&arm0);

    let (ci_low, ci_high) = if opts.bootstrap == 0 {
        (observed, observed)
    } else {
        let boot: Vec<f64> = (0..opts.bootstrap)
            .into_par_iter()
            .map(|b| {
                let mut draw_rng = rng::derive_rng(opts.seed, "ate.bootstrap", b as u64);
                let resample = |vals: &[f64], r: &mut rand_chacha::ChaCha8Rng| {
                    let mut picked: Vec<f64> = (0..vals.len())
                        .map(|_| vals[r.gen_range(0..vals.len())])
                        .collect();
                    stats::stable_sum(&mut picked) / vals.len() as f64
                };
                let m0 = resample(&arm0, &mut draw_rng);
                let m1 = resample(&arm1, &mut draw_rng);
                m1 - m0
            })
            .collect();
        let low = stats::quantile(&boot, 0.025).expect("non-empty bootstrap");
        let high = stats::quantile(&boot, 0.975).expect("non-empty bootstrap");
        (low, high)
    };
    assert!(ci_low <= ci_high);

    let p_value = if opts.permutations == 0 {
        1.0
    } else {
        let mut pooled = Vec::with_capacity(arm0.len() + arm1.len());
        pooled.extend_from_slice(&arm0);
        pooled.extend_from_slice(&arm1);
        let n1 = arm1.len();
        let at_least: usize = (0..opts.permutations)
            .into_par_iter()
            .map(|p| {
                let mut perm_rng = rng::derive_rng(opts.seed, "ate.permutation", p as u64);
                let mut shuffled = pooled.clone();
                shuffled.shuffle(&mut perm_rng);
                let m1 = stats::stable_mean(&shuffled[..n1]).unwrap();
                let m0 = stats::stable_mean(&shuffled[n1..]).unwrap();
                usize::from((m1 - m0).abs() >= observed.abs())
            })
            .sum();
        (1 + at_least) as f64 / (opts.permutations + 1) as f64
    };

    Ok(AteResult {
        feature: feature.to_string(),
        ate: observed,
        ci_low,
        ci_high,
        p_value,
        n_arm0: arm0.len(),
        n_arm1: arm1.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_opts(seed: u64) -> AteOptions {
        AteOptions {
            bootstrap: 500,
            permutations: 500,
            seed,
        }
    }

    #[test]
    fn hand_computed_contrast() {
        let outcomes = [0.0, -1.0, 0.5, -0.5];
        let arms = [Arm::Arm0, Arm::Arm1, Arm::Arm0, Arm::Arm1];
        let result = ate("pec", &outcomes, &arms, &small_opts(1)).unwrap();
        assert!((result.ate - (-1.0)).abs() < 1e-9);
        assert_eq!(result.n_arm0, 2);
        assert_eq!(result.n_arm1, 2);
    }

    #[test]
    fn identical_arms_have_zero_effect_and_p_one() {
        let outcomes = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let arms = [
            Arm::Arm0,
            Arm::Arm0,
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm1,
            Arm::Arm1,
        ];
        let result = ate("pec", &outcomes, &arms, &small_opts(2)).unwrap();
        assert_eq!(result.ate, 0.0);
        // Every permuted |ATE| is ≥ 0 = |observed|, so p is exactly 1.
        assert_eq!(result.p_value, 1.0);
    }

    #[test]
    fn missing_outcomes_are_dropped_per_arm() {
        let outcomes = [0.0, f64::NAN, 1.0, -1.0, f64::NAN, -2.0];
        let arms = [
            Arm::Arm0,
            Arm::Arm0,
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm1,
            Arm::Arm1,
        ];
        let result = ate("pec", &outcomes, &arms, &small_opts(3)).unwrap();
        assert_eq!(result.n_arm0, 2);
        assert_eq!(result.n_arm1, 2);
        assert!((result.ate - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_and_thin_arms_are_errors() {
        let arms_one_sided = [Arm::Arm0, Arm::Arm0, Arm::Arm0];
        assert!(matches!(
            ate("pec", &[1.0, 2.0, 3.0], &arms_one_sided, &small_opts(4)),
            Err(EvalError::EmptyArm(1))
        ));
        let arms = [Arm::Arm0, Arm::Arm0, Arm::Arm1];
        assert!(matches!(
            ate("pec", &[1.0, 2.0, 3.0], &arms, &small_opts(5)),
            Err(EvalError::TooFewOutcomes { arm: 1, got: 1 })
        ));
    }

    #[test]
    fn rerun_is_bit_identical_and_order_invariant() {
        let outcomes = [0.3, -0.7, 1.1, 0.2, -0.4, 0.9, -1.3, 0.6];
        let arms = [
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm0,
            Arm::Arm1,
        ];
        let a = ate("pec", &outcomes, &arms, &small_opts(6)).unwrap();
        let b = ate("pec", &outcomes, &arms, &small_opts(6)).unwrap();
        assert_eq!(a, b);

        let order = [7, 2, 5, 0, 3, 6, 1, 4];
        let shuffled_outcomes: Vec<f64> = order.iter().map(|&i| outcomes[i]).collect();
        let shuffled_arms: Vec<Arm> = order.iter().map(|&i| arms[i]).collect();
        let c = ate("pec", &shuffled_outcomes, &shuffled_arms, &small_opts(6)).unwrap();
        assert_eq!(a, c);
    }

    proptest! {
        /// Shifting one arm by a dyadic constant moves the ATE by exactly
        /// that constant. Dyadic values keep the sums exact and a
        /// power-of-two arm size keeps the mean divisions exact, so the
        /// equality is bitwise.
        #[test]
        fn paired_shift_is_recovered_exactly(
            base in prop::collection::vec(-64i32..64, 4..33),
            shift_quarters in -40i32..40,
        ) {
            let len = 1usize << base.len().ilog2();
            let c = f64::from(shift_quarters) / 4.0;
            let mut outcomes = Vec::new();
            let mut arms = Vec::new();
            for v in &base[..len] {
                let x = f64::from(*v) / 4.0;
                outcomes.push(x);
                arms.push(Arm::Arm0);
                outcomes.push(x + c);
                arms.push(Arm::Arm1);
            }
            let opts = AteOptions { bootstrap: 0, permutations: 0, seed: 0 };
            let result = ate("pec", &outcomes, &arms, &opts).unwrap();
            prop_assert_eq!(result.ate, c);
        }
    }
}
