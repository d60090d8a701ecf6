//! Causal analysis for two-arm randomized trials.
//!
//! The pipeline: load a trial cohort ([`cohort`]), compute per-feature
//! outcome deltas and standardize them, train S-/T-learner meta-models
//! ([`meta`]) over pluggable base learners ([`learners`]), assign each
//! patient the arm with the better predicted outcome, and evaluate any
//! assignment policy with the factual-matching policy-value estimator
//! ([`evaluation`]). A seed-deterministic synthetic trial generator with
//! known potential outcomes ([`synthetic`]) provides the ground truth the
//! estimators are validated against.
//!
//! Everything is deterministic given seeds: parallel sections reduce in a
//! fixed order and floating-point aggregations run over canonically sorted
//! operands, so re-runs (at any thread count) reproduce results bit for bit.

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod cohort;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod meta;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use cohort::{
    Arm, Cohort, CohortManifest, FeatureGroup, FeatureSchema, FormatSpec, OutcomeMatrix,
    PatientRecord, StandardizeMode,
};
pub use data::Matrix;
pub use error::{CohortError, Error, EvalError, LearnerError, MetaError, SyntheticError};
pub use evaluation::{AteOptions, AteResult, FoldPlan, PolicyValueResult, ThresholdSweep};
pub use learners::{LearnerSpec, Model};
pub use meta::{
    CounterfactualScores, MetaKind, MetaModel, MetaSpec, Policy, Provenance, TargetMode,
    ThresholdValue,
};
pub use synthetic::{EffectModel, OracleCohort, OracleTruth, ScenarioSpec};
