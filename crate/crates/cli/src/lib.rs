//! Command-line front end: decouple a coupled polynomial function, expand a
//! decoupled model, or rerun one of the built-in reference experiments.

mod commands;
mod reproduce;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use decoupler_core::decouple::Method;

pub use commands::{cmd_decouple, cmd_expand, parse_function};
pub use reproduce::{cmd_reproduce, reproduce, Assertion, Example, Reproduction, Run};

/// Seed used when neither `--seed` nor `DECOUPLER_SEED` is set.
pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "DECOUPLER_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "decoupler",
    version,
    about = "Decouple polynomial vector functions from their derivatives"
)]
pub struct Cli {
    /// Indented JSON and a short summary on standard error.
    #[arg(long, global = true)]
    pub pretty: bool,

    /// Log verbosity on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover W, V and g from a coupled function.
    Decouple(Box<DecoupleArgs>),
    /// Expand a decoupled model into its coupled polynomials.
    Expand(ExpandArgs),
    /// Rerun a built-in experiment and check its thresholds.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct DecoupleArgs {
    /// Coupled function as JSON (`{"outputs": [...]}`) or one polynomial per
    /// line; `-` reads standard input.
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub degree: usize,
    #[arg(long, default_value = "joint", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Lower sampling bound, one value or one per input (comma separated).
    #[arg(
        long,
        default_value = "-10",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub lo: Vec<f64>,
    /// Upper sampling bound, one value or one per input (comma separated).
    #[arg(
        long,
        default_value = "10",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub hi: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Jacobian weight; defaults to 1/‖J‖².
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// Hessian weight; defaults to 1/‖H‖².
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Reference model JSON used for factor match scores.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Factor match both W and V must reach to count as recovered.
    #[arg(long, default_value_t = decoupler_core::decouple::RECOVERY_THRESHOLD)]
    pub match_threshold: f64,
    /// Number of inputs for text input; defaults to the largest index used.
    #[arg(long)]
    pub inputs: Option<usize>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Destination of the recovered model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Decoupled model JSON (`{"W": ..., "V": ..., "g": ...}`); `-` reads
    /// standard input.
    pub model: PathBuf,
    /// Destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub example: Example,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Destination of the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
        .map_err(|e: decoupler_core::decouple::DecoupleError| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
    InputError,
    AssertionsFailed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::InputError | Status::AssertionsFailed => 1,
            Status::NotConverged => 2,
        }
    }
}

/// `--seed`, then `DECOUPLER_SEED`, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SEED),
        Err(e) => Err(CliError::Input(format!("{SEED_ENV}: {e}"))),
    }
}

pub fn run(cli: &Cli) -> Status {
    let result = match &cli.command {
        Command::Decouple(args) => cmd_decouple(args, cli.pretty),
        Command::Expand(args) => cmd_expand(args, cli.pretty),
        Command::Reproduce(args) => cmd_reproduce(args, cli.pretty),
    };
    result.unwrap_or_else(|e| {
        log::error!("{e}");
        Status::InputError
    })
}

pub(crate) fn serialize<T: serde::Serialize>(value: &T, pretty: bool) -> Result<String, CliError> {
    let mut text = if pretty {
        decoupler_core::json::to_string_pretty(value)
    } else {
        decoupler_core::json::to_string(value)
    }
    .map_err(CliError::input)?;
    text.push('\n');
    Ok(text)
}

pub(crate) fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(CliError::input)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
    }
}

/// Writes every `(destination, text)` pair; `None` goes to standard output.
pub(crate) fn emit(outputs: &[(Option<&PathBuf>, &str)]) -> Result<(), CliError> {
    for (dest, text) in outputs {
        match dest {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
                path: path.to_path_buf(),
                source,
            })?,
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Output {
                        path: "<stdout>".into(),
                        source,
                    })?;
            }
        }
    }
    Ok(())
}
