//! Synthetic two-arm trials with known ground truth.
//!
//! Every generated patient carries both potential outcomes, built
//! symmetrically around a per-patient effect: the outcome under arm 0 is
//! `-tau(x)/2 + eps` and under arm 1 `+tau(x)/2 + eps`, with the same
//! noise draw `eps` in both. The arm-1-minus-arm-0 gap is therefore
//! exactly `tau(x)` per patient, free of noise, and the two arms have
//! identical marginal outcome distributions, so constant and random
//! policies share the same true value. The oracle policy picks the
//! smaller potential outcome (arm 0 on ties).
//!
//! The factual cohort mirrors the observational format: the outcome
//! feature is column 0 (`pec`), its end value is start plus the factual
//! potential outcome with no extra noise, and the remaining features
//! drift randomly between start and end. Each randomness source (feature
//! draws, arm coin, outcome noise, drift, missingness mask) uses its own
//! derived stream per patient, so changing the missing rate re-masks
//! covariates without touching arms or outcomes.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::{Arm, Cohort, FeatureSchema, PatientRecord};
use crate::error::SyntheticError;
use crate::meta::{assign, CounterfactualScores, Policy, Provenance};
use crate::rng;
use crate::stats;

/// How the per-patient effect `tau(x)` depends on the covariates.
///
/// Negative `tau` favors arm 1 (outcomes are severity changes; lower is
/// better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EffectModel {
    /// The same effect for everyone.
    Constant { tau: f64 },
    /// `tau_high` when the boundary feature exceeds the boundary value,
    /// `tau_low` at or below it. With `boundary_value` unset the
    /// generative median of that feature is used (0 for standard-normal
    /// features, `pec_shift + pec_scale * ln 2` for feature 0), so the
    /// two effect groups are balanced in expectation.
    ThresholdHeterogeneous {
        boundary_feature: usize,
        tau_low: f64,
        tau_high: f64,
        #[serde(default)]
        boundary_value: Option<f64>,
    },
    /// `tau = w . x` over the true (unmasked) start covariates.
    LinearHeterogeneous { weights: Vec<f64> },
}

impl EffectModel {
    fn validate(&self, n_features: usize) -> Result<(), SyntheticError> {
        let bad = |msg: String| Err(SyntheticError::InvalidSpec(msg));
        match self {
            EffectModel::Constant { tau } => {
                if !tau.is_finite() {
                    return bad("constant effect must be finite".into());
                }
            }
            EffectModel::ThresholdHeterogeneous {
                boundary_feature,
                tau_low,
                tau_high,
                boundary_value,
            } => {
                if *boundary_feature >= n_features {
                    return bad(format!(
                        "boundary feature {boundary_feature} out of range for {n_features} features"
                    ));
                }
                if !tau_low.is_finite() || !tau_high.is_finite() {
                    return bad("threshold effects must be finite".into());
                }
                if let Some(v) = boundary_value {
                    if !v.is_finite() {
                        return bad("boundary value must be finite".into());
                    }
                }
            }
            EffectModel::LinearHeterogeneous { weights } => {
                if weights.len() != n_features {
                    return bad(format!(
                        "effect weights cover {} features, scenario has {n_features}",
                        weights.len()
                    ));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return bad("effect weights must be finite".into());
                }
            }
        }
        Ok(())
    }

    fn resolved_boundary(&self, spec: &ScenarioSpec) -> f64 {
        match self {
            EffectModel::ThresholdHeterogeneous {
                boundary_feature,
                boundary_value,
                ..
            } => boundary_value.unwrap_or(if *boundary_feature == 0 {
                spec.pec_shift + spec.pec_scale * std::f64::consts::LN_2
            } else {
                0.0
            }),
            _ => 0.0,
        }
    }

    fn tau(&self, x: &[f64], boundary: f64) -> f64 {
        match self {
            EffectModel::Constant { tau } => *tau,
            EffectModel::ThresholdHeterogeneous {
                boundary_feature,
                tau_low,
                tau_high,
                ..
            } => {
                if x[*boundary_feature] > boundary {
                    *tau_high
                } else {
                    *tau_low
                }
            }
            EffectModel::LinearHeterogeneous { weights } => {
                let mut terms: Vec<f64> =
                    weights.iter().zip(x).map(|(w, v)| w * v).collect();
                stats::stable_sum(&mut terms)
            }
        }
    }
}

/// Full description of a synthetic trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_patients: usize,
    pub n_features: usize,
    pub effect: EffectModel,
    /// Standard deviation of the shared outcome noise.
    pub noise_sd: f64,
    /// Probability that a non-outcome start covariate is masked.
    #[serde(default)]
    pub missing_rate: f64,
    /// Location of the outcome feature's start distribution
    /// (`pec_shift + pec_scale * Exp(1)`).
    #[serde(default = "default_pec_shift")]
    pub pec_shift: f64,
    #[serde(default = "default_pec_scale")]
    pub pec_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_pec_shift() -> f64 {
    15.0
}

fn default_pec_scale() -> f64 {
    1.0
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            n_patients: 112,
            n_features: 8,
            effect: EffectModel::Constant { tau: -2.0 },
            noise_sd: 1.0,
            missing_rate: 0.0,
            pec_shift: default_pec_shift(),
            pec_scale: default_pec_scale(),
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |msg: &str| Err(SyntheticError::InvalidSpec(msg.into()));
        if self.n_patients < 4 {
            return bad("need at least 4 patients");
        }
        if self.n_patients > 9999 {
            return bad("at most 9999 patients (ids are four digits)");
        }
        if self.n_features == 0 {
            return bad("need at least the outcome feature");
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return bad("noise_sd must be finite and non-negative");
        }
        if !self.missing_rate.is_finite() || !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing_rate must be in [0, 1)");
        }
        if !self.pec_shift.is_finite() || self.pec_shift < 0.0 {
            return bad("pec_shift must be finite and non-negative");
        }
        if !self.pec_scale.is_finite() || self.pec_scale <= 0.0 {
            return bad("pec_scale must be finite and positive");
        }
        self.effect.validate(self.n_features)
    }

    /// Feature names: the outcome feature first, then numbered covariates.
    pub fn feature_names(&self) -> Vec<String> {
        (0..self.n_features)
            .map(|j| {
                if j == 0 {
                    "pec".to_string()
                } else {
                    format!("f{j:02}")
                }
            })
            .collect()
    }
}

/// Per-patient ground truth, serialized next to the factual cohort.
///
/// Vectors are aligned with `ids`, so the sidecar can be rejoined to the
/// cohort regardless of row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTruth {
    pub spec: ScenarioSpec,
    pub ids: Vec<String>,
    /// Potential outcome (severity change) under arm 0.
    pub y0: Vec<f64>,
    /// Potential outcome under arm 1.
    pub y1: Vec<f64>,
    pub oracle_assignments: Vec<Arm>,
    /// True value of the oracle policy: mean potential outcome when every
    /// patient gets their better arm.
    pub oracle_value: f64,
}

/// A generated trial: the factual cohort plus its ground truth, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCohort {
    pub cohort: Cohort,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub oracle_policy: Policy,
    pub oracle_value: f64,
}

impl OracleCohort {
    /// The serializable sidecar for this trial.
    pub fn truth(&self, spec: &ScenarioSpec) -> OracleTruth {
        OracleTruth {
            spec: spec.clone(),
            ids: self.cohort.patients.iter().map(|p| p.id.clone()).collect(),
            y0: self.y0.clone(),
            y1: self.y1.clone(),
            oracle_assignments: self.oracle_policy.assignments.clone(),
            oracle_value: self.oracle_value,
        }
    }

    /// Rejoin a loaded cohort with its sidecar, reordering the truth
    /// vectors to the cohort's row order.
    pub fn from_parts(cohort: Cohort, truth: &OracleTruth) -> Result<Self, SyntheticError> {
        if truth.ids.len() != cohort.n_patients()
            || truth.y0.len() != truth.ids.len()
            || truth.y1.len() != truth.ids.len()
            || truth.oracle_assignments.len() != truth.ids.len()
        {
            return Err(SyntheticError::Mismatch(format!(
                "sidecar covers {} patients, cohort has {}",
                truth.ids.len(),
                cohort.n_patients()
            )));
        }
        let mut of: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
        for (k, id) in truth.ids.iter().enumerate() {
            of.insert(id.as_str(), k);
        }
        let mut y0 = Vec::with_capacity(cohort.n_patients());
        let mut y1 = Vec::with_capacity(cohort.n_patients());
        let mut assignments = Vec::with_capacity(cohort.n_patients());
        for p in &cohort.patients {
            let k = *of.get(p.id.as_str()).ok_or_else(|| {
                SyntheticError::Mismatch(format!("patient {} not in sidecar", p.id))
            })?;
            y0.push(truth.y0[k]);
            y1.push(truth.y1[k]);
            assignments.push(truth.oracle_assignments[k]);
        }
        let mut oracle_policy = assign(
            &CounterfactualScores {
                arm0: y0.clone(),
                arm1: y1.clone(),
                lower_is_better: true,
            },
            Provenance::Oracle,
        );
        oracle_policy.assignments = assignments;
        Ok(OracleCohort {
            cohort,
            y0,
            y1,
            oracle_policy,
            oracle_value: truth.oracle_value,
        })
    }
}

/// True value of a policy: the mean potential outcome over all patients
/// when each receives the arm the policy assigns. Lower is better.
pub fn true_policy_value(policy: &Policy, oracle: &OracleCohort) -> f64 {
    assert_eq!(
        policy.len(),
        oracle.cohort.n_patients(),
        "policy does not cover the oracle cohort"
    );
    let mut values: Vec<f64> = policy
        .assignments
        .iter()
        .enumerate()
        .map(|(i, arm)| match arm {
            Arm::Arm0 => oracle.y0[i],
            Arm::Arm1 => oracle.y1[i],
        })
        .collect();
    let n = values.len();
    stats::stable_sum(&mut values) / n as f64
}

/// Generate a synthetic trial.
pub fn generate(spec: &ScenarioSpec) -> Result<OracleCohort, SyntheticError> {
    spec.validate()?;
    let names = spec.feature_names();
    let schema = FeatureSchema::from_names(names)
        .map_err(|e| SyntheticError::InvalidSpec(e.to_string()))?;
    let boundary = spec.effect.resolved_boundary(spec);
    let seed = spec.seed;

    let mut patients = Vec::with_capacity(spec.n_patients);
    let mut y0 = Vec::with_capacity(spec.n_patients);
    let mut y1 = Vec::with_capacity(spec.n_patients);
    for i in 0..spec.n_patients {
        let idx = i as u64;
        let pec_start =
            spec.pec_shift + spec.pec_scale * sample_exp(&mut rng::derive_rng(seed, "synthetic.pec", idx));
        let mut feature_rng = rng::derive_rng(seed, "synthetic.features", idx);
        let mut x_true = vec![0.0; spec.n_features];
        x_true[0] = pec_start;
        for slot in x_true.iter_mut().skip(1) {
            *slot = sample_normal(&mut feature_rng);
        }

        let arm = if rng::derive_rng(seed, "synthetic.arm", idx).gen_bool(0.5) {
            Arm::Arm1
        } else {
            Arm::Arm0
        };
        let eps = spec.noise_sd * sample_normal(&mut rng::derive_rng(seed, "synthetic.noise", idx));
        let tau = spec.effect.tau(&x_true, boundary);
        let under0 = -tau / 2.0 + eps;
        let under1 = tau / 2.0 + eps;
        let factual = match arm {
            Arm::Arm0 => under0,
            Arm::Arm1 => under1,
        };

        let mut x_end = x_true.clone();
        x_end[0] = x_true[0] + factual;
        let mut drift_rng = rng::derive_rng(seed, "synthetic.drift", idx);
        for slot in x_end.iter_mut().skip(1) {
            *slot += 0.5 * sample_normal(&mut drift_rng);
        }

        let mut x_start = x_true;
        if spec.missing_rate > 0.0 {
            let mut missing_rng = rng::derive_rng(seed, "synthetic.missing", idx);
            for slot in x_start.iter_mut().skip(1) {
                if missing_rng.gen_bool(spec.missing_rate) {
                    *slot = f64::NAN;
                }
            }
        }

        // The pec fields mirror feature 0; the end field is floored at
        // zero to stay a valid severity score. The floor sits below the
        // remission cutoff, so labels are unaffected, and outcome deltas
        // come from the exact feature columns.
        patients.push(PatientRecord {
            id: format!("p{i:04}"),
            arm,
            pec_start: Some(pec_start),
            pec_end: Some(x_end[0].max(0.0)),
            x_start,
            x_end,
        });
        y0.push(under0);
        y1.push(under1);
    }

    let cohort = Cohort::new(schema, patients)
        .map_err(|e| SyntheticError::InvalidSpec(format!("generated cohort invalid: {e}")))?;
    let oracle_policy = assign(
        &CounterfactualScores {
            arm0: y0.clone(),
            arm1: y1.clone(),
            lower_is_better: true,
        },
        Provenance::Oracle,
    );
    let mut oracle = OracleCohort {
        cohort,
        y0,
        y1,
        oracle_policy,
        oracle_value: 0.0,
    };
    oracle.oracle_value = true_policy_value(&oracle.oracle_policy, &oracle);
    Ok(oracle)
}

fn sample_normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sample_exp(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    rng.sample(Exp1)
}
