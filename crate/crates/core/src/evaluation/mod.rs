//! Causal estimators and the policy-evaluation harness.
//!
//! [`ate`] estimates the average treatment effect of one outcome column
//! with a bootstrap confidence interval and a permutation p-value.
//! [`policy_value`] scores any assignment policy by factual matching:
//! average the outcomes of the patients whose randomized arm happens to
//! equal the policy's choice (unbiased under randomization). Baseline
//! policies, the seeded random-policy reference distribution, the
//! threshold sweep, and out-of-fold cross-validated assignment complete
//! the harness.

mod ate;
mod cv;
mod folds;
mod policy;
mod sweep;

pub use ate::{ate, AteOptions, AteResult};
pub use cv::cross_validated_policy;
pub use folds::FoldPlan;
pub use policy::{
    constant_policy, policy_value, random_policy, random_policy_distribution, Band, DrawSummary,
    PolicyValueResult, RandomPolicyDistribution,
};
pub use sweep::{
    out_of_fold_threshold_sweep, threshold_policy_sweep, ThresholdCandidate, ThresholdSweep,
};
