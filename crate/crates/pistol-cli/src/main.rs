//! `pistol` — train and evaluate the online kernel learners, audit their
//! bounds, and generate synthetic datasets.
//!
//! Exit codes: 0 on success, 1 when an audit reports violations (or a
//! run fails at runtime), 2 for usage/config errors.

mod audit_cmd;
mod config;
mod synth_cmd;
mod train_cmd;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "pistol",
    version,
    about = "Parameter-free stochastic kernel learning harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over shuffles and subsample grids, emitting CSV learning curves
    Train(Box<train_cmd::TrainArgs>),
    /// Run bound certificates and lemma suites; exit 0 iff all pass
    Audit(audit_cmd::AuditArgs),
    /// Generate synthetic LIBSVM train/test files
    Synth(synth_cmd::SynthArgs),
}

/// Errors that should exit with code 2 (usage/config) vs 1 (runtime).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn config_error<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => train_cmd::run(*args),
        Command::Audit(args) => audit_cmd::run(args),
        Command::Synth(args) => synth_cmd::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
