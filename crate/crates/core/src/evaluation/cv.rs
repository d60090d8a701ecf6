//! Out-of-fold policy assignment.
//!
//! For each fold: train the meta-model on the other folds, score and
//! assign the held-out patients. Every patient is therefore assigned by a
//! model that never saw their outcome. Training rows are always passed in
//! id-sorted order, so the out-of-fold policy is a pure function of the
//! cohort content and the fold plan, whatever the input row order.

use rayon::prelude::*;

use crate::cohort::{outcome_deltas, standardize, Arm, Cohort, StandardizeMode};
use crate::error::{Error, EvalError};
use crate::meta::{
    assign, fit_meta, outcome_target, CounterfactualScores, MetaKind, MetaSpec, Policy,
    Provenance, TargetMode,
};

use super::folds::FoldPlan;

struct FoldOutput {
    test: Vec<usize>,
    scores: CounterfactualScores,
}

/// Assign every patient out-of-fold under the given meta spec.
///
/// `mode` controls where standardization statistics come from for
/// continuous targets: the whole cohort (matching an analysis that
/// standardizes before cross-validation) or each fold's training portion
/// only. Assignment compares the two scores per patient, so the choice of
/// scale never leaks across folds either way.
pub fn cross_validated_policy(
    spec: &MetaSpec,
    cohort: &Cohort,
    plan: &FoldPlan,
    mode: StandardizeMode,
) -> Result<Policy, Error> {
    assert_eq!(
        plan.fold_of.len(),
        cohort.n_patients(),
        "fold plan does not cover the cohort"
    );
    let features = cohort.start_matrix();
    let arms = cohort.arms();
    let canonical = cohort.canonical_order();
    let deltas = outcome_deltas(cohort)?;

    // Target columns that are shared across folds; `None` means each fold
    // standardizes its own training portion.
    let global_targets: Option<Vec<f64>> = match spec.target_mode {
        TargetMode::BinaryRemission => Some(
            cohort
                .remission_labels()
                .iter()
                .map(|l| l.map_or(f64::NAN, f64::from))
                .collect(),
        ),
        TargetMode::ContinuousDelta => match mode {
            StandardizeMode::Global => {
                let outcomes = standardize(&deltas, &cohort.schema.names)?;
                Some(outcome_target(&outcomes, &spec.target_feature)?)
            }
            StandardizeMode::TrainOnly => None,
        },
    };

    let fold_outputs: Vec<FoldOutput> = (0..plan.k)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutput, Error> {
            let train: Vec<usize> = canonical
                .iter()
                .copied()
                .filter(|&i| plan.fold_of[i] != fold)
                .collect();
            let test: Vec<usize> = canonical
                .iter()
                .copied()
                .filter(|&i| plan.fold_of[i] == fold)
                .collect();
            if spec.kind == MetaKind::TLearner {
                for arm in [Arm::Arm0, Arm::Arm1] {
                    if !train.iter().any(|&i| arms[i] == arm) {
                        return Err(EvalError::FoldMissingArm {
                            fold,
                            arm: arm.index() as u8,
                        }
                        .into());
                    }
                }
            }
            let wrap = |source: Error| -> Error {
                EvalError::FoldFit {
                    fold,
                    source: Box::new(source),
                }
                .into()
            };
            let train_targets: Vec<f64> = match &global_targets {
                Some(column) => train.iter().map(|&i| column[i]).collect(),
                None => {
                    let train_outcomes = standardize(
                        &deltas.select_rows(&train),
                        &cohort.schema.names,
                    )
                    .map_err(|e| wrap(e.into()))?;
                    outcome_target(&train_outcomes, &spec.target_feature)
                        .map_err(|e| wrap(e.into()))?
                }
            };
            let train_arms: Vec<Arm> = train.iter().map(|&i| arms[i]).collect();
            let meta = fit_meta(spec, &features.select_rows(&train), &train_arms, &train_targets)
                .map_err(|e| wrap(e.into()))?;
            let scores = meta
                .score(&features.select_rows(&test))
                .map_err(|e| wrap(e.into()))?;
            Ok(FoldOutput { test, scores })
        })
        .collect::<Vec<Result<FoldOutput, Error>>>()
        .into_iter()
        // Deterministic error selection: the lowest failing fold wins,
        // whatever order the workers finished in.
        .collect::<Result<_, _>>()?;

    let n = cohort.n_patients();
    let mut arm0 = vec![f64::NAN; n];
    let mut arm1 = vec![f64::NAN; n];
    for output in fold_outputs {
        for (pos, &patient) in output.test.iter().enumerate() {
            arm0[patient] = output.scores.arm0[pos];
            arm1[patient] = output.scores.arm1[pos];
        }
    }
    let scores = CounterfactualScores {
        arm0,
        arm1,
        lower_is_better: spec.target_mode.lower_is_better(),
    };
    let mut policy = assign(
        &scores,
        Provenance::MlOutOfFold {
            meta: spec.kind,
            learner: spec.base.kind_name().to_string(),
            folds: plan.k,
        },
    );
    policy.fold_of = Some(plan.fold_of.clone());
    Ok(policy)
}
