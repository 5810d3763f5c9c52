//! Command line front end for `clarkchaos`: configuration, subcommand
//! dispatch and result files.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::Config;
pub use run::execute;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] clarkchaos::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "clarkchaos", version, about = "Random inner functions with chaos Clark measures")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replica loops.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory for experiment results.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key=value` config override; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print field samples as text rows: M, N, kernel, then M values.
    SampleField(FieldArgs),
    /// Print the chaos measure of one sample as `theta,weight` rows.
    DumpMeasure(FieldArgs),
    /// Evaluate h, phi and log|phi| at one point.
    EvalPhi(EvalArgs),
    /// Locate the zeros of phi as CSV.
    FindZeros(ZerosArgs),
    /// Build the rank-two decomposition for a kernel perturbation.
    Decompose(DecomposeArgs),
    /// Run one experiment and write its tables.
    Experiment {
        /// One of x-moment, log-phi, zero-density, seiberg, multifractal, mass-scaling, imag-bound.
        name: String,
    },
    /// Run every experiment.
    All,
}

/// Field parameters; each flag overrides the `[field]` section.
#[derive(Debug, Clone, Default, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Truncation level.
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    /// Grid size.
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<config::KernelChoice>,
    /// Exact-scaling mollification scale.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Kernel file for the perturbed field.
    #[arg(long)]
    pub g_spec: Option<PathBuf>,
    /// Number of samples (sample-field only).
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Evaluation point `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
    /// Explicit atoms `theta:mass,theta:mass,...` instead of a chaos sample.
    #[arg(long)]
    pub atoms: Option<String>,
    /// Equal atoms at the n-th roots of unity instead of a chaos sample.
    #[arg(long, conflicts_with = "atoms")]
    pub roots: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ZerosArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Search radius.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Evaluation budget.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    /// Kernel file (`degree D` then `i j value` lines); g = 0 when absent.
    #[arg(long)]
    pub g_spec: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Fourier cutoff of the operator grid.
    #[arg(long)]
    pub cutoff: Option<usize>,
}
