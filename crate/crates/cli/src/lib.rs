//! Command-line front end: every computation route of `ndw_core` as a
//! subcommand writing a CSV dataset.

pub mod args;
pub mod commands;
pub mod output;

use std::fs;
use std::io::{self, Write};

pub use args::{Cli, Command, CommonArgs, DEFAULT_SEED};
pub use commands::Outcome;
pub use output::Dataset;

/// Exit status for a usage error.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for a numerical or I/O failure.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a computation finished outside its tolerance.
pub const EXIT_TOLERANCE: i32 = 3;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NDW_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ndw_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_ERROR,
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Evolve(c) => commands::cmd_evolve(c),
        Command::Peak(c) => commands::cmd_peak(c),
        Command::Moments(c) => commands::cmd_moments(c),
        Command::Gaussian(c) => commands::cmd_gaussian(c),
        Command::Mc(c) => commands::cmd_mc(c),
        Command::Dirac { common, dirac } => commands::cmd_dirac(common, dirac),
        Command::Validate { common, momentum } => commands::cmd_validate(common, *momentum),
        Command::Compare(c) => commands::cmd_compare(c),
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

/// Runs a parsed command line, writes its dataset and returns the exit status.
pub fn execute(cli: &Cli) -> i32 {
    let result = configure_threads().and_then(|_| {
        let outcome = run(&cli.command)?;
        let bytes = outcome.dataset.to_bytes()?;
        match &cli.command.common().out {
            Some(path) => fs::write(path, &bytes)?,
            None => io::stdout().lock().write_all(&bytes)?,
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) if outcome.within_tolerance() => 0,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("ndw: tolerance failure: {f}");
            }
            EXIT_TOLERANCE
        }
        Err(e) => {
            eprintln!("ndw: {e}");
            e.exit_code()
        }
    }
}
