//! `evkd bench`: parse and voxelize throughput on a real event file.
//!
//! Event counts and grid dimensions are deterministic; the timing lines
//! necessarily are not and are excluded from byte-identity expectations.
//! The documented soft goal is 10 M events/s parse+voxelize on one
//! desktop core (release build); the command reports, it does not gate.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use evkd::event::{build_voxel_grid, detect_format, parse_event_stream, EventFormat, SensorGeometry};

use super::FormatArg;
use crate::{read_bytes, CliError, CliResult};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Timed repetitions; the best run is reported.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[arg(long, default_value_t = 16)]
    pub a: u16,
    #[arg(long, default_value_t = 16)]
    pub b: u16,
    /// Voxel time-cell in microseconds; defaults to a fifth of the span.
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 1280)]
    pub width: u16,
    #[arg(long, default_value_t = 720)]
    pub height: u16,
}

pub fn run(args: &BenchArgs) -> CliResult {
    if args.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let bytes = read_bytes(&args.input)?;
    let format = match args.format {
        FormatArg::Auto => detect_format(&bytes),
        FormatArg::Csv => EventFormat::Csv,
        FormatArg::Bin => EventFormat::Bin,
    };
    let geometry = SensorGeometry::new(args.width, args.height)
        .map_err(|e| CliError::Usage(format!("bad geometry: {e}")))?;

    let mut best_parse = f64::INFINITY;
    let mut stream = None;
    for _ in 0..args.repeat {
        let start = Instant::now();
        let parsed = parse_event_stream(&bytes, format, geometry)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        best_parse = best_parse.min(start.elapsed().as_secs_f64());
        stream = Some(parsed);
    }
    let stream = stream.expect("at least one repetition ran");
    let events = stream.len();
    if stream.is_empty() {
        return Err(CliError::Invalid("empty stream cannot be benchmarked".into()));
    }
    let span = stream.time_span().map(|(lo, hi)| hi - lo + 1).unwrap();
    let c = args.c.unwrap_or_else(|| span.div_ceil(5).max(1));

    let mut best_voxel = f64::INFINITY;
    let mut total_count = 0u64;
    let mut dims = (0, 0, 0);
    for _ in 0..args.repeat {
        let start = Instant::now();
        let grid = build_voxel_grid(&stream, args.a, args.b, c)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        best_voxel = best_voxel.min(start.elapsed().as_secs_f64());
        total_count = grid.total();
        dims = grid.dims();
    }

    // Deterministic fields first; timing lines are marked as such.
    println!("events,{events}");
    println!("voxel_dims,{},{},{}", dims.0, dims.1, dims.2);
    println!("voxel_total,{total_count}");
    println!("timing_parse_s,{best_parse:.4}");
    println!("timing_voxelize_s,{best_voxel:.4}");
    println!("timing_parse_events_per_s,{:.4}", events as f64 / best_parse);
    println!("timing_voxelize_events_per_s,{:.4}", events as f64 / best_voxel);
    println!(
        "timing_combined_events_per_s,{:.4}",
        events as f64 / (best_parse + best_voxel)
    );
    Ok(())
}
