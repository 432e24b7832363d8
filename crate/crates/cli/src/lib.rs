//! Command-line driver for the mean field game solvers.
//!
//! Subcommands: `run` (finite-horizon solve), `sweep` (horizon sweep),
//! `stationary` (compute the stationary exit time), `fp` / `hjb`
//! (standalone single-equation solves), `verify` (the diagnostics battery
//! from the `[diagnostics]` config section), and `convergence` (refinement
//! study).
//!
//! Exit codes: 0 success with all checks passing; 1 solver failure
//! (including a non-converged fixed point, a legitimate outcome the model
//! has no guarantee against); 2 at least one diagnostic FAIL; 3 config
//! error.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::ConfigFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Path to the TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the run bundle.
    #[arg(long)]
    out: PathBuf,
    /// Accepted for harness compatibility and ignored: every solve is
    /// deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated increasing horizon list, overriding
    /// `[scheme].horizons`.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the finite-horizon coupled system by damped fixed point.
    Run(CommonArgs),
    /// Solve for each horizon in a growing list and compare early windows.
    Sweep(SweepArgs),
    /// Compute the stationary exit time (uncongested long-time limit).
    Stationary(CommonArgs),
    /// Standalone forward density solve with the configured drift.
    Fp(CommonArgs),
    /// Standalone backward value-function solve with uncongested speed.
    Hjb(CommonArgs),
    /// Run the diagnostics battery listed in the [diagnostics] section.
    Verify(CommonArgs),
    /// Grid/step refinement study of operators and solvers.
    Convergence(CommonArgs),
}

#[derive(Parser, Debug)]
#[command(
    name = "mfg",
    version,
    about = "Minimal-time mean field game solvers: coupled density / exit-time system with absorbing boundary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Parse arguments, dispatch, and translate outcomes into the exit-code
/// taxonomy. `argv[0]` must be the binary name.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("{e}");
            return 3;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => commands::run(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Stationary(args) => commands::stationary(args),
        Command::Fp(args) => commands::fp(args),
        Command::Hjb(args) => commands::hjb(args),
        Command::Verify(args) => commands::verify(args),
        Command::Convergence(args) => commands::convergence(args),
    };
    match outcome {
        Ok(commands::Outcome {
            checks_failed: false,
        }) => 0,
        Ok(commands::Outcome {
            checks_failed: true,
        }) => 2,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
