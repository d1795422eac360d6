//! The `nors` command line: generate SPDE datasets, list model features,
//! train and evaluate Fourier neural operators on them.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure. The binary reports errors as one JSON line on stderr.

mod commands;
pub mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_sizes, Sizes};
pub use crate::error::CliError;

#[derive(Parser)]
#[command(name = "nors", version, about = "Operator learning for SPDEs with regularity-structure features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Simulate an equation and write (u0, ξ, u_T) samples.
    GenData(GenDataArgs),
    /// Print the model feature basis, optionally precomputing a feature cache.
    Features(FeaturesArgs),
    /// Train an operator on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint, optionally at another resolution.
    Eval(EvalArgs),
}

#[derive(Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// phi41 | rd_mult | ns2d
    #[arg(long)]
    pub equation: Option<String>,
    /// Number of samples.
    #[arg(long = "n")]
    pub samples: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    /// Second axis for ns2d (defaults to nx).
    #[arg(long)]
    pub ny: Option<usize>,
    /// Storage time steps.
    #[arg(long)]
    pub nt: Option<usize>,
    /// fixed_u0 | varying_u0
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Args)]
pub struct FeaturesArgs {
    #[arg(long, default_value = "phi41")]
    pub equation: String,
    #[arg(long, default_value_t = 2)]
    pub height: u32,
    /// Widths and orders `m,l,p,q`; defaults to the equation's.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub degcap: Option<f64>,
    /// Degree of I_c[u0].
    #[arg(long)]
    pub deg_init: Option<f64>,
    /// literal | compat
    #[arg(long, default_value = "literal")]
    pub mode: String,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Precompute the feature cache for this dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_sizes)]
    pub resolution: Option<Sizes>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Split, shuffle and initialisation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// features | raw
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Training grid, e.g. `16` or `16,16`.
    #[arg(long, value_parser = parse_sizes)]
    pub resolution: Option<Sizes>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub overwrite: bool,
    /// Only print the final summary.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Checkpoint directory, or a training output directory containing one.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluation grid, e.g. `64` or `64,64`; defaults to the training grid.
    #[arg(long, value_parser = parse_sizes)]
    pub resolution: Option<Sizes>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Features(a) => commands::features(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
    }
}

/// Parses `args` (program name first) and runs the command. Argument errors
/// are configuration errors.
pub fn run_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}
