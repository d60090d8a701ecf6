//! Pluggable regression base learners.
//!
//! Four kinds behind one interface: a decision tree, gradient-boosted
//! trees, a feedforward network, and a support-vector regressor. The tree
//! kinds route missing values through a learned default direction and
//! report gain-based feature importance; the other two impute missing
//! cells with stored training means. Fits are bit-reproducible from the
//! spec's seed.

mod boosted;
mod mlp;
mod svr;
mod tree;

pub use boosted::{BoostedModel, BoostedParams};
pub use mlp::{Activation, FeedforwardModel, FeedforwardParams};
pub use svr::{Kernel, SupportVectorModel, SupportVectorParams};
pub use tree::TreeNode;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::LearnerError;
use crate::stats;

/// Version written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<u32>,
    pub min_samples_leaf: usize,
    /// Kept for interface uniformity; the grower itself is deterministic.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.min_samples_leaf == 0 {
            return Err(LearnerError::InvalidSpec(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(LearnerError::InvalidSpec(
                "max_depth must be at least 1 when set".into(),
            ));
        }
        Ok(())
    }
}

/// Which learner to fit, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerSpec {
    Tree(TreeParams),
    BoostedTrees(BoostedParams),
    Feedforward(FeedforwardParams),
    SupportVector(SupportVectorParams),
}

impl LearnerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LearnerSpec::Tree(_) => "tree",
            LearnerSpec::BoostedTrees(_) => "boosted-trees",
            LearnerSpec::Feedforward(_) => "feedforward",
            LearnerSpec::SupportVector(_) => "support-vector",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LearnerSpec::Tree(p) => p.seed,
            LearnerSpec::BoostedTrees(p) => p.seed,
            LearnerSpec::Feedforward(p) => p.seed,
            LearnerSpec::SupportVector(p) => p.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> LearnerSpec {
        let mut spec = self.clone();
        match &mut spec {
            LearnerSpec::Tree(p) => p.seed = seed,
            LearnerSpec::BoostedTrees(p) => p.seed = seed,
            LearnerSpec::Feedforward(p) => p.seed = seed,
            LearnerSpec::SupportVector(p) => p.seed = seed,
        }
        spec
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        match self {
            LearnerSpec::Tree(p) => p.validate(),
            LearnerSpec::BoostedTrees(p) => p.validate(),
            LearnerSpec::Feedforward(p) => p.validate(),
            LearnerSpec::SupportVector(p) => p.validate(),
        }
    }

    /// Fit this learner. Targets must be finite; feature cells may be
    /// missing (NaN).
    pub fn fit(&self, x: &Matrix, y: &[f64]) -> Result<Model, LearnerError> {
        self.validate()?;
        assert_eq!(x.n_rows(), y.len(), "feature/target row count mismatch");
        if x.n_cols() == 0 {
            return Err(LearnerError::InvalidSpec(
                "feature width must be positive".into(),
            ));
        }
        let min_rows = match self {
            LearnerSpec::Tree(p) => p.min_samples_leaf.max(2),
            _ => 2,
        };
        if x.n_rows() < min_rows {
            return Err(LearnerError::TooFewRows {
                needed: min_rows,
                got: x.n_rows(),
            });
        }
        if let Some(row) = y.iter().position(|t| !t.is_finite()) {
            return Err(LearnerError::BadTarget(row));
        }
        let warnings = all_missing_warnings(x);
        match self {
            LearnerSpec::Tree(p) => {
                let rows: Vec<usize> = (0..x.n_rows()).collect();
                let cfg = tree::GrowConfig {
                    max_depth: p.max_depth,
                    min_leaf: p.min_samples_leaf as f64,
                    l2: 0.0,
                    leaf_scale: 1.0,
                };
                let grown = tree::grow(x, &rows, y, &cfg);
                Ok(Model::Tree(TreeModel {
                    params: p.clone(),
                    n_features: x.n_cols(),
                    nodes: grown.nodes,
                    gains: grown.gains,
                    warnings,
                }))
            }
            LearnerSpec::BoostedTrees(p) => boosted::fit(p, x, y, warnings).map(Model::BoostedTrees),
            LearnerSpec::Feedforward(p) => mlp::fit(p, x, y, warnings).map(Model::Feedforward),
            LearnerSpec::SupportVector(p) => svr::fit(p, x, y, warnings).map(Model::SupportVector),
        }
    }
}

fn all_missing_warnings(x: &Matrix) -> Vec<String> {
    (0..x.n_cols())
        .filter(|&j| (0..x.n_rows()).all(|r| x.is_missing(r, j)))
        .map(|j| format!("feature column {j} has no observed values; treated as uninformative"))
        .collect()
}

/// A single fitted decision tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub params: TreeParams,
    pub(crate) n_features: usize,
    pub(crate) nodes: Vec<TreeNode>,
    pub(crate) gains: Vec<f64>,
    pub(crate) warnings: Vec<String>,
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Tree(TreeModel),
    BoostedTrees(BoostedModel),
    Feedforward(FeedforwardModel),
    SupportVector(SupportVectorModel),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Tree(_) => "tree",
            Model::BoostedTrees(_) => "boosted-trees",
            Model::Feedforward(_) => "feedforward",
            Model::SupportVector(_) => "support-vector",
        }
    }

    pub fn spec(&self) -> LearnerSpec {
        match self {
            Model::Tree(m) => LearnerSpec::Tree(m.params.clone()),
            Model::BoostedTrees(m) => LearnerSpec::BoostedTrees(m.params.clone()),
            Model::Feedforward(m) => LearnerSpec::Feedforward(m.params.clone()),
            Model::SupportVector(m) => LearnerSpec::SupportVector(m.params.clone()),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Tree(m) => m.n_features,
            Model::BoostedTrees(m) => m.n_features,
            Model::Feedforward(m) => m.scaler.width(),
            Model::SupportVector(m) => m.scaler.width(),
        }
    }

    /// Training-mean imputation vector, for the kinds that impute.
    pub fn imputation_vector(&self) -> Option<&[f64]> {
        match self {
            Model::Feedforward(m) => Some(m.scaler.imputation_vector()),
            Model::SupportVector(m) => Some(m.scaler.imputation_vector()),
            _ => None,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            Model::Tree(m) => &m.warnings,
            Model::BoostedTrees(m) => &m.warnings,
            Model::Feedforward(m) => &m.warnings,
            Model::SupportVector(m) => &m.warnings,
        }
    }

    /// One finite prediction per row; missing cells follow the learned
    /// default direction (trees) or the stored imputation means (others).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
        let expected = self.n_features();
        if x.n_cols() != expected {
            return Err(LearnerError::ShapeMismatch {
                expected,
                got: x.n_cols(),
            });
        }
        let out: Vec<f64> = (0..x.n_rows())
            .map(|r| {
                let row = x.row(r);
                match self {
                    Model::Tree(m) => tree::predict_row(&m.nodes, row),
                    Model::BoostedTrees(m) => m.predict_row(row),
                    Model::Feedforward(m) => m.predict_row(row),
                    Model::SupportVector(m) => m.predict_row(row),
                }
            })
            .collect();
        if let Some(row) = out.iter().position(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinitePrediction(row));
        }
        Ok(out)
    }

    /// Per-feature split gains, normalized to sum to 1 when any split
    /// exists. Only tree kinds carry importances.
    pub fn importance(&self) -> Result<Vec<f64>, LearnerError> {
        let gains = match self {
            Model::Tree(m) => &m.gains,
            Model::BoostedTrees(m) => &m.gains,
            other => return Err(LearnerError::UnsupportedImportance(other.kind_name())),
        };
        let total: f64 = gains.iter().sum();
        if total > 0.0 {
            Ok(gains.iter().map(|g| g / total).collect())
        } else {
            Ok(vec![0.0; gains.len()])
        }
    }

    /// Serialize to the versioned structured-text model format.
    pub fn to_json(&self) -> Result<String, LearnerError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            format_version: u32,
            model: &'a Model,
        }
        serde_json::to_string_pretty(&Envelope {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        })
        .map_err(|e| LearnerError::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Model, LearnerError> {
        #[derive(Deserialize)]
        struct Envelope {
            format_version: u32,
            model: Model,
        }
        let envelope: Envelope =
            serde_json::from_str(text).map_err(|e| LearnerError::Serialize(e.to_string()))?;
        if envelope.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Serialize(format!(
                "unsupported model format version {}",
                envelope.format_version
            )));
        }
        Ok(envelope.model)
    }
}

/// Mean imputation plus column standardization, fitted on training data.
/// A missing cell transforms to exactly 0; an all-missing column gets
/// mean 0 and std 1 so it stays uninformative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ColumnScaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl ColumnScaler {
    pub(crate) fn fit(x: &Matrix) -> ColumnScaler {
        let mut means = Vec::with_capacity(x.n_cols());
        let mut stds = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let present = stats::present(&x.column(j));
            let (mean, std) = stats::stable_mean_pop_std(&present).unwrap_or((0.0, 1.0));
            means.push(mean);
            stds.push(if std == 0.0 { 1.0 } else { std });
        }
        ColumnScaler { means, stds }
    }

    pub(crate) fn width(&self) -> usize {
        self.means.len()
    }

    /// Training-column means in raw units, the imputation targets.
    pub(crate) fn imputation_vector(&self) -> &[f64] {
        &self.means
    }

    pub(crate) fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if v.is_nan() {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                }
            })
            .collect()
    }
}
