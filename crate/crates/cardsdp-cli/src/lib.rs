//! Command-line interface and benchmark harness.
//!
//! Subcommands: `solve` (relaxation pipeline on one instance), `exact`
//! (enumeration or branch-and-bound oracle), `bench` (directory sweep
//! emitting per-instance and aggregate CSVs), `gen` (seeded synthetic
//! instances). Set `CARDSDP_LOG=1` for per-iteration solver logs on
//! standard error.
//!
//! Exit codes: 0 for any completed run, 2 for validation errors, 3 for
//! solver failures.

pub mod bench;
pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "cardsdp",
    version,
    about = "Bounds for cardinality-constrained portfolios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and solve the relaxation, round to a portfolio, report lb/ub/gap.
    Solve(SolveArgs),
    /// Run an exact oracle: support enumeration or branch-and-bound.
    Exact(ExactArgs),
    /// Sweep a directory of instances and emit benchmark CSVs.
    Bench(BenchArgs),
    /// Generate a synthetic instance file.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance file (canonical JSON).
    pub instance: PathBuf,
    /// Override the cardinality cap from the file.
    #[arg(long)]
    pub aleph: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Write the conic problem in sparse SDPA format before solving.
    #[arg(long, value_name = "FILE")]
    pub export_sdpa: Option<PathBuf>,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    Bb,
    Enum,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub aleph: Option<usize>,
    /// Seconds before branch-and-bound returns its current bounds.
    #[arg(long, default_value_t = 90.0)]
    pub time_limit: f64,
    #[arg(long, value_enum, default_value = "bb")]
    pub method: ExactMethod,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of canonical instance files (*.json).
    pub dir: PathBuf,
    /// Cardinality caps to run per instance.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    pub alephs: Vec<usize>,
    /// Exact-solver time limit per run, in seconds.
    #[arg(long, default_value_t = 90.0)]
    pub time_limit: f64,
    /// Worker threads; 1 gives a fully sequential, reproducible sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory for bench_rows.csv and bench_aggregate.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Leave timing cells empty so repeated runs are byte-identical.
    #[arg(long)]
    pub redact_times: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub factors: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho_quantile: f64,
    /// Cardinality cap stored in the file (defaults to min(n, 3)).
    #[arg(long)]
    pub aleph: Option<usize>,
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

/// Whether per-iteration solver logging is requested via `CARDSDP_LOG`.
pub fn log_enabled() -> bool {
    std::env::var("CARDSDP_LOG")
        .map(|v| !v.is_empty() && v != "0")
        .unwrap_or(false)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => commands::cmd_solve(&args),
        Command::Exact(args) => commands::cmd_exact(&args),
        Command::Bench(args) => commands::cmd_bench(&args),
        Command::Gen(args) => commands::cmd_gen(&args),
    }
}
