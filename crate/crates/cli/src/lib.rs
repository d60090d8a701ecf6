//! Command-line front end for the armwise toolkit.
//!
//! The binary wires the library pipeline end to end: simulate a trial,
//! estimate average effects, compare assignment policies, rank features,
//! and export plot-ready tables. Every command reads an optional TOML
//! config, applies flag overrides on top, and writes its outputs plus a
//! run manifest under `--output-dir`. Reruns with the same arguments and
//! seeds produce byte-identical files.

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod report;

/// Exit code 2: the inputs were bad (missing file, invalid column,
/// malformed config). Exit code 1: the computation itself failed.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<armwise::Error> for CliError {
    fn from(e: armwise::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "armwise",
    version,
    about = "Treatment-arm assignment analysis for two-arm randomized trials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the average treatment effect per outcome column.
    Ate(SharedArgs),
    /// Compare assignment policies by factual-matching value.
    Policy(SharedArgs),
    /// Rank features by split gain in per-arm models.
    Importance(SharedArgs),
    /// Generate a synthetic trial with known potential outcomes.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Export threshold curves and random-draw tables for plotting.
    PlotData(SharedArgs),
}

/// Flags common to every command. Unset flags fall back to the config
/// file, then to built-in defaults; flags always win.
#[derive(Debug, Args, Default)]
pub struct SharedArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,

    /// Cohort file to analyze.
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,

    /// Ground-truth sidecar from `simulate`; adds true-value columns.
    #[arg(long)]
    pub oracle: Option<std::path::PathBuf>,

    /// Directory for reports and the run manifest.
    #[arg(long, default_value = "armwise-out")]
    pub output_dir: std::path::PathBuf,

    /// Master seed for all randomized steps.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Outcome column(s) to analyze; repeatable. Defaults to "pec".
    #[arg(long = "outcome-column")]
    pub outcome_columns: Vec<String>,

    /// Cross-validation fold count.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Disable stratification of folds by arm.
    #[arg(long)]
    pub unstratified: bool,

    /// Bootstrap resample count for ATE confidence intervals.
    #[arg(long)]
    pub bootstrap: Option<usize>,

    /// Permutation count for ATE p-values.
    #[arg(long)]
    pub permutations: Option<usize>,

    /// Random-policy draw count for the reference band.
    #[arg(long)]
    pub random_draws: Option<usize>,

    /// Outcome standardization: "global" or "train-only".
    #[arg(long)]
    pub standardize: Option<String>,

    /// Training target: "continuous-delta" or "binary-remission".
    #[arg(long)]
    pub target_mode: Option<String>,

    /// TOML file with [[model]] tables overriding the default grid.
    #[arg(long)]
    pub grid: Option<std::path::PathBuf>,

    /// Features listed per importance panel.
    #[arg(long)]
    pub top_k: Option<usize>,
}

/// `simulate` takes the shared flags plus scenario shorthands. The full
/// effect-model vocabulary (threshold and linear heterogeneity) is only
/// reachable through the config file's `[scenario]` table.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub shared: SharedArgs,

    /// Number of patients to generate.
    #[arg(long)]
    pub n_patients: Option<usize>,

    /// Number of start/end feature pairs.
    #[arg(long)]
    pub n_features: Option<usize>,

    /// Constant treatment effect; overrides the config's effect model.
    #[arg(long)]
    pub tau: Option<f64>,

    /// Outcome noise standard deviation.
    #[arg(long)]
    pub noise_sd: Option<f64>,

    /// Probability of masking a non-outcome covariate.
    #[arg(long)]
    pub missing_rate: Option<f64>,

    /// Location of the outcome feature's start distribution.
    #[arg(long)]
    pub pec_shift: Option<f64>,

    /// Scale of the outcome feature's start distribution.
    #[arg(long)]
    pub pec_scale: Option<f64>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ate(args) => commands::ate::run(&args),
        Command::Policy(args) => commands::policy::run(&args),
        Command::Importance(args) => commands::importance::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::PlotData(args) => commands::plot_data::run(&args),
    }
}
