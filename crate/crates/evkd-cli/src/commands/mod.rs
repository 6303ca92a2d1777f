//! Subcommand implementations. Each module exposes its clap `Args` struct
//! and a `run` function; machine-readable outputs use fixed four-decimal
//! formatting so repeated invocations are byte-identical.

pub mod asr_sim;
pub mod bench;
pub mod eval;
pub mod kd_check;
pub mod stack;
pub mod ttt_sim;
pub mod voxelize;

use std::path::Path;

use clap::ValueEnum;
use evkd::event::{detect_format, parse_event_stream, EventFormat, EventStream, SensorGeometry};

use crate::{read_bytes, CliError};

/// Input-format selection shared by the stream-consuming commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// Sniff the BIN magic, fall back to CSV.
    Auto,
    Csv,
    Bin,
}

/// Reads and parses an event file. `width`/`height` supply the CSV
/// geometry; BIN files carry their own.
pub(crate) fn load_stream(
    path: &Path,
    format: FormatArg,
    width: u16,
    height: u16,
) -> Result<EventStream, CliError> {
    let bytes = read_bytes(path)?;
    let format = match format {
        FormatArg::Auto => detect_format(&bytes),
        FormatArg::Csv => EventFormat::Csv,
        FormatArg::Bin => EventFormat::Bin,
    };
    let geometry = SensorGeometry::new(width, height)
        .map_err(|e| CliError::Usage(format!("bad geometry: {e}")))?;
    parse_event_stream(&bytes, format, geometry)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}
