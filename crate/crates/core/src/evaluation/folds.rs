//! Deterministic cross-validation fold plans.
//!
//! Folds are dealt round-robin over patients sorted by id, so the plan is
//! a pure function of the patient ids: shuffling input rows cannot move
//! anyone to a different fold. Stratified mode deals each arm's patients
//! in turn while the round-robin counter keeps running, which balances
//! fold sizes overall and within each arm simultaneously.

use serde::{Deserialize, Serialize};

use crate::cohort::{Arm, Cohort};
use crate::error::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of each patient, in cohort row order.
    pub fold_of: Vec<usize>,
    pub stratified: bool,
}

impl FoldPlan {
    /// Deal `k` folds over the cohort. Stratified mode keeps each arm's
    /// counts within 1 across folds.
    pub fn derive(cohort: &Cohort, k: usize, stratified: bool) -> Result<FoldPlan, EvalError> {
        let n = cohort.n_patients();
        if k < 2 || k > n {
            return Err(EvalError::BadFoldCount { k, n });
        }
        let canonical = cohort.canonical_order();
        let mut fold_of = vec![0usize; n];
        if stratified {
            let mut counter = 0usize;
            for arm in [Arm::Arm0, Arm::Arm1] {
                for &idx in &canonical {
                    if cohort.patients[idx].arm == arm {
                        fold_of[idx] = counter % k;
                        counter += 1;
                    }
                }
            }
        } else {
            for (rank, &idx) in canonical.iter().enumerate() {
                fold_of[idx] = rank % k;
            }
        }
        Ok(FoldPlan {
            k,
            fold_of,
            stratified,
        })
    }

    /// Patient indices of one fold, in cohort row order.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Patient indices outside one fold, in cohort row order.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}
