use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod ledger;
mod manifest;

/// Invalid arguments or input; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "stgl", version, about = "Temporal graph learning runs: ingest, train, evaluate, score")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read an interaction CSV into a binary snapshot.
    Ingest(commands::ingest::IngestArgs),
    /// Train link-prediction models, one per seed.
    Train(commands::train::TrainArgs),
    /// Evaluate checkpoints on the test split.
    Eval(commands::eval::EvalArgs),
    /// Feature-label alignment and generalization score at initialization.
    Fla(commands::fla::FlaArgs),
    /// Input-selection, direction and slot-weight ablations.
    Ablate(commands::ablate::AblateArgs),
    /// Summarize the ledgers in a run directory.
    Report(commands::report::ReportArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<stgl_core::Error>() {
            if e.is_validation() {
                return 2;
            }
        }
    }
    1
}

/// Looks relative paths up under `STGL_DATA_DIR` when they do not exist as
/// given.
pub fn resolve_data_path(p: PathBuf) -> PathBuf {
    if p.exists() || p.is_absolute() {
        return p;
    }
    match std::env::var_os("STGL_DATA_DIR") {
        Some(root) => {
            let candidate = PathBuf::from(root).join(&p);
            if candidate.exists() {
                candidate
            } else {
                p
            }
        }
        None => p,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Fla(a) => commands::fla::run(a),
        Command::Ablate(a) => commands::ablate::run(a),
        Command::Report(a) => commands::report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
