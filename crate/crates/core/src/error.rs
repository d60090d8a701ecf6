//! Error types, one enum per subsystem plus an umbrella `Error`.

use thiserror::Error;

/// Cohort ingestion, validation, and standardization failures.
#[derive(Debug, Error)]
pub enum CohortError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("missing mandatory column {0:?}")]
    MissingColumn(String),
    #[error("unrecognized column {0:?} (features need the start/end suffixes)")]
    UnknownColumn(String),
    #[error("feature {0:?} has a start column but no end column")]
    UnpairedFeature(String),
    #[error("duplicate patient id {id:?} at row {row}")]
    DuplicateId { id: String, row: usize },
    #[error("row {row}: arm value {value:?} is not 0, 1, or a configured alias")]
    InvalidArm { row: usize, value: String },
    #[error("row {row}, column {column}: {message}")]
    InvalidValue {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema invariant violated: {0}")]
    Schema(String),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("feature {0:?} not found in the schema")]
    UnknownFeature(String),
    #[error("every outcome column is degenerate (constant or near-empty); nothing to standardize")]
    AllColumnsDegenerate,
    #[error("column {0:?} has fewer than 2 non-missing entries")]
    TooFewObservations(String),
}

/// Base-learner fitting and prediction failures.
#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid hyperparameter: {0}")]
    InvalidSpec(String),
    #[error("training needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("training target at row {0} is missing or non-finite")]
    BadTarget(usize),
    #[error("feature width mismatch: model expects {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("feature importance is only defined for tree-based models, not {0}")]
    UnsupportedImportance(&'static str),
    #[error("model produced a non-finite prediction at row {0}")]
    NonFinitePrediction(usize),
    #[error("model serialization failed: {0}")]
    Serialize(String),
}

/// Meta-learner (S-/T-learner) failures.
#[derive(Debug, Error)]
pub enum MetaError {
    #[error("t-learner training set has no patients in arm {0}")]
    EmptyArm(u8),
    #[error("s-learner needs at least 4 training patients, got {0}")]
    TooFewPatients(usize),
    #[error("t-learner needs at least 2 training patients per arm, arm {arm} has {got}")]
    TooFewPerArm { arm: u8, got: usize },
    #[error("target column {0:?} is not available in the outcome matrix")]
    MissingTarget(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Estimator and policy-evaluation failures.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("arm {0} has no usable (non-missing) outcomes")]
    EmptyArm(u8),
    #[error("arm {arm} needs at least 2 non-missing outcomes, got {got}")]
    TooFewOutcomes { arm: u8, got: usize },
    #[error("policy covers {policy} patients but the cohort has {cohort}")]
    PolicyCohortMismatch { policy: usize, cohort: usize },
    #[error("threshold sweep column has no non-missing values")]
    AllValuesMissing,
    #[error("fold count {k} is invalid for {n} patients")]
    BadFoldCount { k: usize, n: usize },
    #[error(
        "fold {fold} training portion has no arm-{arm} patients; \
         consider a stratified fold plan or fewer folds"
    )]
    FoldMissingArm { fold: usize, arm: u8 },
    #[error("fold {fold}: {source}")]
    FoldFit {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

/// Synthetic-scenario validation failures.
#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("oracle data does not match cohort: {0}")]
    Mismatch(String),
}

/// Umbrella error for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
}

impl Error {
    /// True when the failure stems from bad input (files, specs, config)
    /// rather than a computation that could not proceed.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Cohort(_) | Error::Synthetic(_) => true,
            Error::Learner(e) => matches!(e, LearnerError::InvalidSpec(_)),
            Error::Meta(MetaError::MissingTarget(_)) => true,
            Error::Meta(_) => false,
            Error::Eval(e) => matches!(
                e,
                EvalError::BadFoldCount { .. } | EvalError::InvalidOption(_)
            ),
        }
    }
}
