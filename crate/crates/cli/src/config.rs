//! Config resolution: built-in defaults, then the TOML file, then flags.

use std::path::{Path, PathBuf};

use armwise::{EffectModel, FormatSpec, MetaSpec, ScenarioSpec, StandardizeMode, TargetMode};
use serde::{Deserialize, Serialize};

use crate::{CliError, SharedArgs, SimulateArgs};

/// Shape of the optional TOML config file. Every key is optional; the
/// `[[model]]` tables replace the default learner grid when present.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub seed: Option<u64>,
    pub outcome_columns: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub stratified: Option<bool>,
    pub bootstrap: Option<usize>,
    pub permutations: Option<usize>,
    pub random_draws: Option<usize>,
    pub standardize: Option<String>,
    pub target_mode: Option<String>,
    pub top_k: Option<usize>,
    pub format: Option<FormatSpec>,
    pub scenario: Option<ScenarioSpec>,
    #[serde(default, rename = "model")]
    pub models: Vec<MetaSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

/// The fully resolved settings for one run, echoed verbatim into the run
/// manifest. Paths are recorded as given, not canonicalized, so reruns
/// with identical arguments produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub outcome_columns: Vec<String>,
    pub folds: usize,
    pub stratified: bool,
    pub bootstrap: usize,
    pub permutations: usize,
    pub random_draws: usize,
    pub standardize: StandardizeMode,
    pub target_mode: TargetMode,
    pub top_k: usize,
    pub format: FormatSpec,
    pub models: Vec<MetaSpec>,
    pub scenario: Option<ScenarioSpec>,
}

fn parse_standardize(raw: &str) -> Result<StandardizeMode, CliError> {
    match raw {
        "global" => Ok(StandardizeMode::Global),
        "train-only" => Ok(StandardizeMode::TrainOnly),
        other => Err(CliError::Validation(format!(
            "unknown standardize mode {other:?}; expected \"global\" or \"train-only\""
        ))),
    }
}

fn parse_target_mode(raw: &str) -> Result<TargetMode, CliError> {
    match raw {
        "continuous-delta" => Ok(TargetMode::ContinuousDelta),
        "binary-remission" => Ok(TargetMode::BinaryRemission),
        other => Err(CliError::Validation(format!(
            "unknown target mode {other:?}; expected \"continuous-delta\" or \"binary-remission\""
        ))),
    }
}

/// The grid compared by `policy` when no file or `[[model]]` tables
/// override it: both meta-learners over a boosted-tree base.
pub fn default_grid() -> Vec<MetaSpec> {
    use armwise::{LearnerSpec, MetaKind};
    let base = LearnerSpec::BoostedTrees(Default::default());
    vec![
        MetaSpec::new(MetaKind::TLearner, base.clone()),
        MetaSpec::new(MetaKind::SLearner, base),
    ]
}

/// Grid files hold `[[model]]` tables only; other keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    #[serde(default, rename = "model")]
    model: Vec<MetaSpec>,
}

pub fn resolve(shared: &SharedArgs, command: &str) -> Result<RunConfig, CliError> {
    let file = match &shared.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let standardize = match shared.standardize.as_deref().or(file.standardize.as_deref()) {
        Some(raw) => parse_standardize(raw)?,
        None => StandardizeMode::Global,
    };
    let target_mode = match shared.target_mode.as_deref().or(file.target_mode.as_deref()) {
        Some(raw) => parse_target_mode(raw)?,
        None => TargetMode::ContinuousDelta,
    };

    let mut models = if let Some(path) = &shared.grid {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read grid {}: {e}", path.display()))
        })?;
        let grid: GridFile = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad grid {}: {e}", path.display())))?;
        grid.model
    } else {
        file.models
    };
    if models.is_empty() {
        models = default_grid();
    }

    let outcome_columns = if shared.outcome_columns.is_empty() {
        file.outcome_columns
            .unwrap_or_else(|| vec![armwise::meta::DEFAULT_TARGET_FEATURE.to_string()])
    } else {
        shared.outcome_columns.clone()
    };
    if outcome_columns.is_empty() {
        return Err(CliError::Validation(
            "at least one outcome column is required".into(),
        ));
    }

    // Policy comparison targets a single outcome column: the first one.
    // Each grid model's target is forced to it so rows are comparable.
    let target = outcome_columns[0].clone();
    for spec in &mut models {
        spec.target_feature = target.clone();
        spec.target_mode = target_mode;
    }

    let folds = shared.folds.or(file.folds).unwrap_or(6);
    if folds < 2 {
        return Err(CliError::Validation(format!(
            "--folds must be at least 2, got {folds}"
        )));
    }
    let top_k = shared.top_k.or(file.top_k).unwrap_or(5);
    if top_k == 0 {
        return Err(CliError::Validation("--top-k must be positive".into()));
    }
    let random_draws = shared.random_draws.or(file.random_draws).unwrap_or(1000);
    if random_draws == 0 {
        return Err(CliError::Validation(
            "--random-draws must be positive".into(),
        ));
    }

    Ok(RunConfig {
        command: command.to_string(),
        input: shared.input.clone().or(file.input),
        oracle: shared.oracle.clone().or(file.oracle),
        output_dir: shared.output_dir.clone(),
        seed: shared.seed.or(file.seed).unwrap_or(0),
        outcome_columns,
        folds,
        stratified: if shared.unstratified {
            false
        } else {
            file.stratified.unwrap_or(true)
        },
        bootstrap: shared.bootstrap.or(file.bootstrap).unwrap_or(10_000),
        permutations: shared.permutations.or(file.permutations).unwrap_or(10_000),
        random_draws,
        standardize,
        target_mode,
        top_k,
        format: file.format.unwrap_or_default(),
        models,
        scenario: file.scenario,
    })
}

/// Scenario resolution for `simulate`: config file `[scenario]` table if
/// present, shorthand flags on top. `--tau` swaps in a constant effect.
pub fn resolve_scenario(args: &SimulateArgs, config: &RunConfig) -> ScenarioSpec {
    let mut spec = config.scenario.clone().unwrap_or_default();
    spec.seed = config.seed;
    if let Some(n) = args.n_patients {
        spec.n_patients = n;
    }
    if let Some(n) = args.n_features {
        spec.n_features = n;
    }
    if let Some(tau) = args.tau {
        spec.effect = EffectModel::Constant { tau };
    }
    if let Some(sd) = args.noise_sd {
        spec.noise_sd = sd;
    }
    if let Some(rate) = args.missing_rate {
        spec.missing_rate = rate;
    }
    if let Some(shift) = args.pec_shift {
        spec.pec_shift = shift;
    }
    if let Some(scale) = args.pec_scale {
        spec.pec_scale = scale;
    }
    spec
}
