//! Exhaustive threshold-policy search over one feature column.
//!
//! Candidates are every midpoint between consecutive distinct observed
//! values plus the two open ends, each in both orientations (high side →
//! arm 1 or arm 0). The open ends make both constant policies candidates,
//! so the sweep's best can never fall below them.

use serde::{Deserialize, Serialize};

use crate::cohort::Arm;
use crate::error::EvalError;
use crate::meta::{Policy, Provenance, ThresholdValue};
use crate::stats;

use super::policy::{policy_value, PolicyValueResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCandidate {
    pub threshold: ThresholdValue,
    /// Arm assigned to patients with `value > threshold`.
    pub high_arm: Arm,
    pub value: PolicyValueResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub feature: String,
    pub best: Policy,
    pub best_value: PolicyValueResult,
    /// Every candidate in scan order: thresholds ascending, arm-1-high
    /// before arm-0-high.
    pub curve: Vec<ThresholdCandidate>,
}

/// Assignments for one (threshold, orientation) candidate. A missing
/// feature value always lands on the low side.
fn threshold_assignments(column: &[f64], threshold: f64, high_arm: Arm) -> Vec<Arm> {
    column
        .iter()
        .map(|&v| {
            if !v.is_nan() && v > threshold {
                high_arm
            } else {
                high_arm.other()
            }
        })
        .collect()
}

/// Sweep all threshold policies on a feature column and keep the most
/// effective. Ties prefer the lower threshold, then the arm-1-high
/// orientation.
pub fn threshold_policy_sweep(
    feature: &str,
    column: &[f64],
    arms: &[Arm],
    outcomes: &[f64],
    remission: &[Option<u8>],
) -> Result<ThresholdSweep, EvalError> {
    let mut distinct = stats::present(column);
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.is_empty() {
        return Err(EvalError::AllValuesMissing);
    }

    let mut thresholds = vec![ThresholdValue::NegInf];
    for pair in distinct.windows(2) {
        thresholds.push(ThresholdValue::Value(pair[0] / 2.0 + pair[1] / 2.0));
    }
    thresholds.push(ThresholdValue::PosInf);

    let mut curve = Vec::with_capacity(thresholds.len() * 2);
    let mut best: Option<(usize, f64)> = None; // (curve index, effectiveness)
    for threshold in thresholds {
        for high_arm in [Arm::Arm1, Arm::Arm0] {
            let policy = Policy {
                assignments: threshold_assignments(column, threshold.as_f64(), high_arm),
                provenance: Provenance::Threshold {
                    feature: feature.to_string(),
                    threshold,
                    high_arm,
                },
                scores: None,
                fold_of: None,
            };
            let value = policy_value(&policy, arms, outcomes, remission)?;
            let score = value.effectiveness.unwrap_or(f64::NEG_INFINITY);
            let index = curve.len();
            curve.push(ThresholdCandidate {
                threshold,
                high_arm,
                value,
            });
            if best.map_or(true, |(_, incumbent)| score > incumbent) {
                best = Some((index, score));
            }
        }
    }

    let (best_index, _) = best.expect("at least two candidates");
    let winner = &curve[best_index];
    let best_policy = Policy {
        assignments: threshold_assignments(column, winner.threshold.as_f64(), winner.high_arm),
        provenance: winner.value.provenance.clone(),
        scores: None,
        fold_of: None,
    };
    Ok(ThresholdSweep {
        feature: feature.to_string(),
        best: best_policy,
        best_value: winner.value.clone(),
        curve,
    })
}

/// Out-of-fold threshold baseline: each fold's patients are assigned by
/// the best rule found by sweeping the other folds only, so the reported
/// value is free of the in-sample selection optimism.
pub fn out_of_fold_threshold_sweep(
    feature: &str,
    column: &[f64],
    arms: &[Arm],
    outcomes: &[f64],
    remission: &[Option<u8>],
    plan: &super::folds::FoldPlan,
) -> Result<Policy, EvalError> {
    assert_eq!(plan.fold_of.len(), column.len(), "fold plan does not cover the column");
    let mut assignments = vec![Arm::Arm0; column.len()];
    for fold in 0..plan.k {
        let train = plan.complement(fold);
        let sub = |rows: &[usize]| -> (Vec<f64>, Vec<Arm>, Vec<f64>, Vec<Option<u8>>) {
            (
                rows.iter().map(|&i| column[i]).collect(),
                rows.iter().map(|&i| arms[i]).collect(),
                rows.iter().map(|&i| outcomes[i]).collect(),
                rows.iter().map(|&i| remission[i]).collect(),
            )
        };
        let (t_col, t_arms, t_out, t_rem) = sub(&train);
        let swept = threshold_policy_sweep(feature, &t_col, &t_arms, &t_out, &t_rem)
            .map_err(|e| EvalError::FoldFit {
                fold,
                source: Box::new(e.into()),
            })?;
        let (threshold, high_arm) = match swept.best.provenance {
            Provenance::Threshold {
                threshold, high_arm, ..
            } => (threshold, high_arm),
            _ => unreachable!("sweep winners carry threshold provenance"),
        };
        for &i in &plan.members(fold) {
            let v = column[i];
            assignments[i] = if !v.is_nan() && v > threshold.as_f64() {
                high_arm
            } else {
                high_arm.other()
            };
        }
    }
    Ok(Policy {
        assignments,
        provenance: Provenance::ThresholdOutOfFold {
            feature: feature.to_string(),
            folds: plan.k,
        },
        scores: None,
        fold_of: Some(plan.fold_of.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::folds::FoldPlan;
    use crate::evaluation::policy::constant_policy;

    #[test]
    fn two_distinct_values_give_six_candidates() {
        let column = [10.0, 20.0, 10.0, 20.0];
        let arms = [Arm::Arm0, Arm::Arm1, Arm::Arm1, Arm::Arm0];
        let outcomes = [-1.0, -2.0, -3.0, -4.0];
        let remission = [Some(1), Some(1), Some(0), Some(0)];
        let sweep =
            threshold_policy_sweep("pec", &column, &arms, &outcomes, &remission).unwrap();
        assert_eq!(sweep.curve.len(), 6);
        let interior: Vec<_> = sweep
            .curve
            .iter()
            .filter(|c| matches!(c.threshold, ThresholdValue::Value(v) if v == 15.0))
            .collect();
        assert_eq!(interior.len(), 2);
    }

    #[test]
    fn constant_feature_yields_only_constant_policies() {
        let column = [5.0; 4];
        let arms = [Arm::Arm0, Arm::Arm1, Arm::Arm0, Arm::Arm1];
        let outcomes = [1.0, 2.0, 3.0, 4.0];
        let remission = [None, None, None, None];
        let sweep =
            threshold_policy_sweep("pec", &column, &arms, &outcomes, &remission).unwrap();
        assert_eq!(sweep.curve.len(), 4);
        for candidate in &sweep.curve {
            let first = candidate.value.matched_count;
            let assignments = threshold_assignments(
                &column,
                candidate.threshold.as_f64(),
                candidate.high_arm,
            );
            assert!(
                assignments.iter().all(|&a| a == assignments[0]),
                "candidate {candidate:?} is not constant (matched {first})"
            );
        }
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let column = [f64::NAN; 3];
        let arms = [Arm::Arm0, Arm::Arm1, Arm::Arm0];
        assert!(matches!(
            threshold_policy_sweep("pec", &column, &arms, &[0.0; 3], &[None; 3]),
            Err(EvalError::AllValuesMissing)
        ));
    }

    #[test]
    fn best_is_at_least_both_constants() {
        let column = [12.0, 30.0, 18.0, 25.0, 9.0, 40.0];
        let arms = [
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm0,
            Arm::Arm1,
            Arm::Arm1,
            Arm::Arm0,
        ];
        let outcomes = [-5.0, -20.0, 2.0, -11.0, 0.5, -3.0];
        let remission = [Some(0), Some(1), Some(0), Some(1), Some(0), Some(1)];
        let sweep =
            threshold_policy_sweep("pec", &column, &arms, &outcomes, &remission).unwrap();
        let best_eff = sweep.best_value.effectiveness.unwrap();
        for arm in [Arm::Arm0, Arm::Arm1] {
            let constant = policy_value(
                &constant_policy(arms.len(), arm),
                &arms,
                &outcomes,
                &remission,
            )
            .unwrap();
            assert!(best_eff >= constant.effectiveness.unwrap());
        }
    }

    #[test]
    fn ties_prefer_lower_threshold_then_arm1_high() {
        // Everything matches under every candidate that assigns the
        // factual arms; craft full-tie effectiveness so scan order decides.
        let column = [1.0, 2.0];
        let arms = [Arm::Arm1, Arm::Arm1];
        let outcomes = [0.0, 0.0];
        let remission = [Some(1), Some(1)];
        let sweep =
            threshold_policy_sweep("pec", &column, &arms, &outcomes, &remission).unwrap();
        // Scan starts at (−inf, arm-1 high): everyone high side → arm 1,
        // effectiveness 1.0; nothing later can strictly beat it.
        assert!(matches!(
            sweep.best_value.provenance,
            Provenance::Threshold {
                threshold: ThresholdValue::NegInf,
                high_arm: Arm::Arm1,
                ..
            }
        ));
    }

    #[test]
    fn missing_values_land_on_the_low_side() {
        let assignments = threshold_assignments(&[f64::NAN, 10.0], 5.0, Arm::Arm1);
        assert_eq!(assignments, vec![Arm::Arm0, Arm::Arm1]);
        let flipped = threshold_assignments(&[f64::NAN, 10.0], 5.0, Arm::Arm0);
        assert_eq!(flipped, vec![Arm::Arm1, Arm::Arm0]);
    }

    #[test]
    fn out_of_fold_sweep_recovers_a_strong_rule() {
        // Two patients per value, one per arm, so a wrong-side rule always
        // leaves a matched non-remitting patient in view (a lone factual
        // arm would just be dropped by matching). Patients above 10 remit
        // only under arm 1, the rest only under arm 0. Folds group whole
        // values, so each training sweep still pins the boundary to within
        // one value gap; only values adjacent to the boundary may land on
        // a fold-specific side.
        let n = 30;
        let value = |i: usize| (i / 2) as f64;
        let column: Vec<f64> = (0..n).map(value).collect();
        let arms: Vec<Arm> = (0..n)
            .map(|i| if i % 2 == 0 { Arm::Arm0 } else { Arm::Arm1 })
            .collect();
        let benefits = |i: usize, a: Arm| (value(i) > 10.0) == (a == Arm::Arm1);
        let outcomes: Vec<f64> = (0..n)
            .map(|i| if benefits(i, arms[i]) { -5.0 } else { 5.0 })
            .collect();
        let remission: Vec<Option<u8>> = (0..n)
            .map(|i| Some(u8::from(benefits(i, arms[i]))))
            .collect();
        let plan = FoldPlan {
            k: 3,
            fold_of: (0..n).map(|i| (i / 2) % 3).collect(),
            stratified: false,
        };
        let policy =
            out_of_fold_threshold_sweep("pec", &column, &arms, &outcomes, &remission, &plan)
                .unwrap();
        assert_eq!(policy.fold_of.as_ref().unwrap(), &plan.fold_of);
        assert!(matches!(
            policy.provenance,
            Provenance::ThresholdOutOfFold { folds: 3, .. }
        ));
        for i in 0..n {
            if value(i) <= 9.0 {
                assert_eq!(policy.assignments[i], Arm::Arm0, "patient {i}");
            } else if value(i) >= 12.0 {
                assert_eq!(policy.assignments[i], Arm::Arm1, "patient {i}");
            }
        }

        let repeat =
            out_of_fold_threshold_sweep("pec", &column, &arms, &outcomes, &remission, &plan)
                .unwrap();
        assert_eq!(repeat, policy);
    }
}
