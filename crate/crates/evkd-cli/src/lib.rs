//! The `evkd` command-line surface.
//!
//! Subcommands cover stream conversion (`stack`, `voxelize`), the loss
//! self-test suite (`kd-check`), evaluation (`eval`), inference-strategy
//! simulation (`asr-sim`, `ttt-sim`), and throughput measurement
//! (`bench`). Exit codes: 0 success, 1 validation findings, 2 usage
//! error, 3 I/O error. A `key=value` config file can preset any flag of
//! the invoked subcommand (command-line flags win), and `EVKD_THREADS`
//! caps the worker-thread count.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

/// Env var capping the rayon worker count.
pub const THREADS_ENV: &str = "EVKD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "evkd", version, about = "Event-stream tracking toolkit")]
pub struct Cli {
    /// key=value file presetting flags of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stack an event file into a fixed number of time-windowed frames.
    Stack(commands::stack::StackArgs),
    /// Bin an event file into a spatio-temporal voxel grid.
    Voxelize(commands::voxelize::VoxelizeArgs),
    /// Run the finite-difference and value-oracle suites for every loss.
    KdCheck(commands::kd_check::KdCheckArgs),
    /// Evaluate tracker result files against a dataset.
    Eval(commands::eval::EvalArgs),
    /// Replay an IoU trace through the adaptive-search-region controller.
    AsrSim(commands::asr_sim::AsrSimArgs),
    /// Run toy test-time tuning on an event-file fixture.
    TttSim(commands::ttt_sim::TttSimArgs),
    /// Measure parse and voxelize throughput.
    Bench(commands::bench::BenchArgs),
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: input was read but failed validation, or a check suite
    /// reported findings.
    Invalid(String),
    /// Exit 2: bad invocation (also produced by clap itself).
    Usage(String),
    /// Exit 3: the operating system failed us.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

/// Reads a file, mapping OS failures to exit code 3.
pub(crate) fn read_bytes(path: &std::path::Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Applies `EVKD_THREADS` to the global rayon pool. Callable once; later
/// calls are no-ops, which is fine for a single-invocation CLI.
pub fn init_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Dispatches a parsed invocation.
pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Stack(args) => commands::stack::run(&args),
        Command::Voxelize(args) => commands::voxelize::run(&args),
        Command::KdCheck(args) => commands::kd_check::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::AsrSim(args) => commands::asr_sim::run(&args),
        Command::TttSim(args) => commands::ttt_sim::run(&args),
        Command::Bench(args) => commands::bench::run(&args),
    }
}
