//! `evkd stack`: event file -> fixed-count frame manifest.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use evkd::event::stack_to_frames;

use super::{load_stream, FormatArg};
use crate::{write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct StackArgs {
    /// Event file (CSV or BIN).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of frames to stack into.
    #[arg(long, default_value_t = 499)]
    pub frames: usize,
    /// Output directory for the frame manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Sensor width for CSV input.
    #[arg(long, default_value_t = 1280)]
    pub width: u16,
    /// Sensor height for CSV input.
    #[arg(long, default_value_t = 720)]
    pub height: u16,
}

pub fn run(args: &StackArgs) -> CliResult {
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be at least 1".into()));
    }
    let stream = load_stream(&args.input, args.format, args.width, args.height)?;
    let total = stream.len();
    let frames = stack_to_frames(&stream, args.frames)
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut manifest = String::from("frame,t_start,t_end,on_events,off_events,total\n");
    for (i, frame) in frames.iter().enumerate() {
        let (start, end) = frame.window();
        writeln!(
            manifest,
            "{i},{start},{end},{},{},{}",
            frame.on_count(),
            frame.off_count(),
            frame.total_events()
        )
        .unwrap();
    }
    write_file(&args.out.join("frames.csv"), manifest.as_bytes())?;

    let stacked: usize = frames.iter().map(|f| f.total_events()).sum();
    println!("frames,{}", frames.len());
    println!("events,{total}");
    println!("stacked_events,{stacked}");
    Ok(())
}
