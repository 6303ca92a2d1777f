//! `evkd asr-sim`: replay an IoU trace through the adaptive-search-region
//! controller and print the per-step crop multiplier.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use evkd::inference::{asr_step, AsrConfig, AsrState};

use crate::{read_bytes, write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct AsrSimArgs {
    /// File with one IoU value per line.
    #[arg(long)]
    pub iou_trace: PathBuf,
    /// IoU threshold below which a frame counts as a failure.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Consecutive failures before the search region expands.
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    /// Crop expansion factor once tracking is deemed lost.
    #[arg(long, default_value_t = 1.5)]
    pub theta: f64,
    /// Optional CSV output path (the trace is always printed).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &AsrSimArgs) -> CliResult {
    if !(args.tau >= 0.0 && args.tau <= 1.0) {
        return Err(CliError::Usage("--tau must lie in [0, 1]".into()));
    }
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if !(args.theta >= 1.0) {
        return Err(CliError::Usage("--theta must be at least 1".into()));
    }
    let bytes = read_bytes(&args.iou_trace)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Invalid("IoU trace is not valid UTF-8".into()))?;
    let mut ious = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            CliError::Invalid(format!("IoU trace line {}: `{line}` is not a number", idx + 1))
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(CliError::Invalid(format!(
                "IoU trace line {}: {value} outside [0, 1]",
                idx + 1
            )));
        }
        ious.push(value);
    }

    let cfg = AsrConfig {
        iou_threshold: args.tau,
        patience: args.k,
        expansion: args.theta,
    };
    let mut state = AsrState::default();
    let mut trace = String::from("step,iou,multiplier\n");
    for (step, &iou) in ious.iter().enumerate() {
        let (next, multiplier) = asr_step(state, iou, &cfg);
        state = next;
        writeln!(trace, "{},{iou:.4},{multiplier:.4}", step + 1).unwrap();
    }
    print!("{trace}");
    if let Some(path) = &args.out {
        write_file(path, trace.as_bytes())?;
    }
    Ok(())
}
