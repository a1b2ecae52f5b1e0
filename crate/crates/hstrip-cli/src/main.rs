//! `hstrip` command line driver.
//!
//! Every subcommand reads a JSON [`config::RunConfig`], writes CSV and JSON
//! files into `<out>/<subcommand>/` and finishes with a `manifest.json`
//! listing the config hash, the seed and the SHA-256 of every file written.
//!
//! Exit codes: 0 success, 1 numerical guard or failed check, 2 config error.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable that overrides the output directory of the config.
pub const OUT_ENV: &str = "HSTRIP_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("guard tripped: {0}")]
    Guard(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<hstrip::Error> for CliError {
    fn from(e: hstrip::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Guard(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "hstrip", version, about = "Experiments for the pinned H^{2|2} model on strip graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json"))]
    pub config: PathBuf,
    /// Output directory; overrides HSTRIP_OUT and the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the invariant suite on the configured model.
    Verify(Common),
    /// Estimate E[exp((t_l - t_0)/2)] against l.
    Decay(Common),
    /// Transfer operator diagnostics.
    Spectrum(Common),
    /// Alphabet and word-count report of the tree codec.
    Codec(Common),
    /// VRJP trajectories, mixing check and localization statistics.
    Vrjp {
        #[command(flatten)]
        common: Common,
        /// Clock horizon of each recorded trajectory.
        #[arg(long)]
        horizon: Option<f64>,
        /// Number of recorded trajectories.
        #[arg(long)]
        runs: Option<usize>,
        /// Longest skeleton path length in the mixing check.
        #[arg(long)]
        tmax: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Verify(c) => verify::run(&c),
        Command::Decay(c) => commands::decay(&c),
        Command::Spectrum(c) => commands::spectrum(&c),
        Command::Codec(c) => commands::codec(&c),
        Command::Vrjp { common, horizon, runs, tmax } => commands::vrjp(&common, horizon, runs, tmax),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hstrip: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
