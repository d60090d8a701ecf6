//! S-learner and T-learner meta-algorithms over the base learners.
//!
//! Both train on pre-treatment features and a chosen outcome column, score
//! every patient under each counterfactual arm, and assign the arm with
//! the better predicted outcome. Outcome columns are severity deltas, so
//! "better" means lower; a direct binary-remission target flips the
//! direction (higher predicted remission wins). Exact ties always resolve
//! to arm 0, the less restrictive regimen.

use serde::{Deserialize, Serialize};

use crate::cohort::{Arm, OutcomeMatrix};
use crate::data::Matrix;
use crate::error::{LearnerError, MetaError};
use crate::learners::{LearnerSpec, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaKind {
    SLearner,
    TLearner,
}

impl MetaKind {
    pub fn name(self) -> &'static str {
        match self {
            MetaKind::SLearner => "s-learner",
            MetaKind::TLearner => "t-learner",
        }
    }
}

/// What the base learners are trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    /// Standardized severity delta of the target column; lower is better.
    #[default]
    ContinuousDelta,
    /// Binary remission label (0/1); higher is better.
    BinaryRemission,
}

impl TargetMode {
    pub fn lower_is_better(self) -> bool {
        matches!(self, TargetMode::ContinuousDelta)
    }
}

pub const DEFAULT_TARGET_FEATURE: &str = "pec";

fn default_target_feature() -> String {
    DEFAULT_TARGET_FEATURE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSpec {
    pub kind: MetaKind,
    pub base: LearnerSpec,
    /// Outcome column the base learners predict.
    #[serde(default = "default_target_feature")]
    pub target_feature: String,
    #[serde(default)]
    pub target_mode: TargetMode,
}

impl MetaSpec {
    pub fn new(kind: MetaKind, base: LearnerSpec) -> Self {
        MetaSpec {
            kind,
            base,
            target_feature: default_target_feature(),
            target_mode: TargetMode::default(),
        }
    }
}

/// The continuous training target for a meta-fit: the standardized delta
/// column named by the spec. Fails when standardization dropped (or never
/// had) that column.
pub fn outcome_target(outcomes: &OutcomeMatrix, feature: &str) -> Result<Vec<f64>, MetaError> {
    outcomes
        .column(feature)
        .ok_or_else(|| MetaError::MissingTarget(feature.to_string()))
}

/// Predicted outcome per patient under each arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualScores {
    pub arm0: Vec<f64>,
    pub arm1: Vec<f64>,
    /// Direction of "better": true for severity deltas, false for
    /// remission probabilities.
    pub lower_is_better: bool,
}

/// A feature cutoff that may sit at either end of the real line. The
/// open ends serialize as the strings "-inf"/"inf" (JSON numbers cannot
/// be infinite); finite cutoffs serialize as plain numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdValue {
    NegInf,
    Value(f64),
    PosInf,
}

impl ThresholdValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ThresholdValue::NegInf => f64::NEG_INFINITY,
            ThresholdValue::Value(v) => v,
            ThresholdValue::PosInf => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            ThresholdValue::NegInf
        } else if v == f64::INFINITY {
            ThresholdValue::PosInf
        } else {
            ThresholdValue::Value(v)
        }
    }
}

impl Serialize for ThresholdValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ThresholdValue::NegInf => serializer.serialize_str("-inf"),
            ThresholdValue::PosInf => serializer.serialize_str("inf"),
            ThresholdValue::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Ok(ThresholdValue::Value(v)),
            Repr::Text(s) => match s.as_str() {
                "-inf" => Ok(ThresholdValue::NegInf),
                "inf" => Ok(ThresholdValue::PosInf),
                other => Err(serde::de::Error::custom(format!(
                    "threshold must be a number, \"-inf\", or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// Where a policy's assignments came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// In-sample meta-model assignment.
    Ml { meta: MetaKind, learner: String },
    /// Out-of-fold meta-model assignment from cross-validation.
    MlOutOfFold {
        meta: MetaKind,
        learner: String,
        folds: usize,
    },
    /// Patients with `feature > threshold` get `high_arm`, the rest (and
    /// missing values) the other arm.
    Threshold {
        feature: String,
        threshold: ThresholdValue,
        high_arm: Arm,
    },
    /// Stitched from per-fold threshold sweeps: each fold's patients are
    /// assigned by the best rule found on the other folds.
    ThresholdOutOfFold { feature: String, folds: usize },
    Constant { arm: Arm },
    Random { seed: u64 },
    /// True-effect assignment from a synthetic scenario.
    Oracle,
}

impl Provenance {
    /// Short label used in reports and exported assignment files.
    pub fn label(&self) -> String {
        match self {
            Provenance::Ml { meta, learner } => format!("{}/{learner}", meta.name()),
            Provenance::MlOutOfFold { meta, learner, folds } => {
                format!("{}/{learner}/{folds}-fold", meta.name())
            }
            Provenance::Threshold {
                feature,
                threshold,
                high_arm,
            } => format!(
                "threshold/{feature}>{}->arm{}",
                match threshold {
                    ThresholdValue::NegInf => "-inf".to_string(),
                    ThresholdValue::PosInf => "inf".to_string(),
                    ThresholdValue::Value(v) => format!("{v}"),
                },
                high_arm.index()
            ),
            Provenance::ThresholdOutOfFold { feature, folds } => {
                format!("threshold-oof/{feature}/{folds}-fold")
            }
            Provenance::Constant { arm } => format!("constant/arm{}", arm.index()),
            Provenance::Random { seed } => format!("random/seed{seed}"),
            Provenance::Oracle => "oracle".to_string(),
        }
    }
}

/// A per-patient treatment assignment with its origin and, when a model
/// produced it, the counterfactual scores behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub assignments: Vec<Arm>,
    pub provenance: Provenance,
    pub scores: Option<CounterfactualScores>,
    /// For out-of-fold policies: which fold scored each patient.
    pub fold_of: Option<Vec<usize>>,
}

impl Policy {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Argmin (or argmax for higher-is-better scores) over the two arms, with
/// exact ties going to arm 0.
pub fn assign(scores: &CounterfactualScores, provenance: Provenance) -> Policy {
    let assignments = scores
        .arm0
        .iter()
        .zip(&scores.arm1)
        .map(|(&s0, &s1)| {
            let arm1_wins = if scores.lower_is_better { s1 < s0 } else { s1 > s0 };
            if arm1_wins {
                Arm::Arm1
            } else {
                Arm::Arm0
            }
        })
        .collect();
    Policy {
        assignments,
        provenance,
        scores: Some(scores.clone()),
        fold_of: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum MetaInner {
    Single(Model),
    PerArm { arm0: Model, arm1: Model },
}

/// A fitted S- or T-learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub spec: MetaSpec,
    inner: MetaInner,
}

/// Train a meta-model on pre-treatment features, observed arms, and a
/// training target. Rows with a missing (NaN) target are dropped before
/// fitting; preconditions apply to what remains.
pub fn fit_meta(
    spec: &MetaSpec,
    features: &Matrix,
    arms: &[Arm],
    targets: &[f64],
) -> Result<MetaModel, MetaError> {
    assert_eq!(features.n_rows(), arms.len(), "feature/arm length mismatch");
    assert_eq!(features.n_rows(), targets.len(), "feature/target length mismatch");
    let kept: Vec<usize> = (0..targets.len()).filter(|&i| !targets[i].is_nan()).collect();
    let kept_targets: Vec<f64> = kept.iter().map(|&i| targets[i]).collect();
    let inner = match spec.kind {
        MetaKind::SLearner => {
            if kept.len() < 4 {
                return Err(MetaError::TooFewPatients(kept.len()));
            }
            let arm_column: Vec<f64> = kept.iter().map(|&i| arms[i].index() as f64).collect();
            let x = features.select_rows(&kept).with_appended_column(&arm_column);
            MetaInner::Single(spec.base.fit(&x, &kept_targets)?)
        }
        MetaKind::TLearner => {
            let mut split: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for &i in &kept {
                split[arms[i].index()].push(i);
            }
            for (a, rows) in split.iter().enumerate() {
                if rows.is_empty() {
                    return Err(MetaError::EmptyArm(a as u8));
                }
                if rows.len() < 2 {
                    return Err(MetaError::TooFewPerArm {
                        arm: a as u8,
                        got: rows.len(),
                    });
                }
            }
            let fit_arm = |rows: &[usize], seed_offset: u64| -> Result<Model, LearnerError> {
                let x = features.select_rows(rows);
                let y: Vec<f64> = rows.iter().map(|&i| targets[i]).collect();
                let seed = spec.base.seed().wrapping_add(seed_offset);
                spec.base.with_seed(seed).fit(&x, &y)
            };
            MetaInner::PerArm {
                arm0: fit_arm(&split[0], 0)?,
                arm1: fit_arm(&split[1], 1)?,
            }
        }
    };
    Ok(MetaModel {
        spec: spec.clone(),
        inner,
    })
}

impl MetaModel {
    /// Predict both counterfactual outcomes for every row.
    pub fn score(&self, features: &Matrix) -> Result<CounterfactualScores, MetaError> {
        let (arm0, arm1) = match &self.inner {
            MetaInner::Single(model) => {
                let zeros = vec![0.0; features.n_rows()];
                let ones = vec![1.0; features.n_rows()];
                (
                    model.predict(&features.with_appended_column(&zeros))?,
                    model.predict(&features.with_appended_column(&ones))?,
                )
            }
            MetaInner::PerArm { arm0, arm1 } => {
                (arm0.predict(features)?, arm1.predict(features)?)
            }
        };
        Ok(CounterfactualScores {
            arm0,
            arm1,
            lower_is_better: self.spec.target_mode.lower_is_better(),
        })
    }

    /// Score and assign in one step, with in-sample provenance.
    pub fn assign(&self, features: &Matrix) -> Result<Policy, MetaError> {
        let scores = self.score(features)?;
        Ok(assign(&scores, self.provenance()))
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::Ml {
            meta: self.spec.kind,
            learner: self.spec.base.kind_name().to_string(),
        }
    }

    /// The single S-learner model, if this is an S-learner.
    pub fn single_model(&self) -> Option<&Model> {
        match &self.inner {
            MetaInner::Single(m) => Some(m),
            MetaInner::PerArm { .. } => None,
        }
    }

    /// The per-arm T-learner model, if this is a T-learner.
    pub fn arm_model(&self, arm: Arm) -> Option<&Model> {
        match &self.inner {
            MetaInner::Single(_) => None,
            MetaInner::PerArm { arm0, arm1 } => Some(match arm {
                Arm::Arm0 => arm0,
                Arm::Arm1 => arm1,
            }),
        }
    }

    pub fn warnings(&self) -> Vec<&str> {
        match &self.inner {
            MetaInner::Single(m) => m.warnings().iter().map(String::as_str).collect(),
            MetaInner::PerArm { arm0, arm1 } => arm0
                .warnings()
                .iter()
                .chain(arm1.warnings())
                .map(String::as_str)
                .collect(),
        }
    }
}
