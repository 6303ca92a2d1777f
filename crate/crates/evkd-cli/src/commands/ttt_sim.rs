//! `evkd ttt-sim`: toy test-time tuning on an event-file fixture.
//!
//! The file is stacked into `--video-frames` frames; a deterministic toy
//! tracker is initialized from `--seed`, wrapped with a zero-initialized
//! LoRA adapter, tuned on the initial `--n` frames, and then run over the
//! whole video. Outputs: `ttt_log.csv` (per-epoch losses) and
//! `predictions.txt` (one `x,y,w,h` line per frame).

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use evkd::inference::{
    predict_boxes, ttt_schedule, LoraAdapter, LoraTarget, TttConfig, TttVideo,
};
use evkd::toy::ToyParams;

use super::{load_stream, FormatArg};
use crate::{write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct TttSimArgs {
    /// Event file serving as the toy video.
    #[arg(long)]
    pub video: PathBuf,
    /// Frames to stack the recording into.
    #[arg(long, default_value_t = 10)]
    pub video_frames: usize,
    /// Initial frames used for pseudo-labels.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Decoupled weight decay.
    #[arg(long, default_value_t = 0.1)]
    pub wd: f64,
    /// Sparsity levels for template augmentation.
    #[arg(long, default_value_t = 4)]
    pub templates: usize,
    /// LoRA rank.
    #[arg(long, default_value_t = 16)]
    pub rank: usize,
    /// LoRA scaling numerator.
    #[arg(long, default_value_t = 32.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Toy feature-vector length (perfect square).
    #[arg(long, default_value_t = 64)]
    pub features: usize,
    #[arg(long, default_value_t = 16)]
    pub map_rows: usize,
    #[arg(long, default_value_t = 16)]
    pub map_cols: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 1280)]
    pub width: u16,
    #[arg(long, default_value_t = 720)]
    pub height: u16,
}

pub fn run(args: &TttSimArgs) -> CliResult {
    if args.video_frames == 0 || args.n == 0 || args.templates == 0 || args.rank == 0 {
        return Err(CliError::Usage(
            "--video-frames, --n, --templates, and --rank must be positive".into(),
        ));
    }
    if !(args.lr > 0.0) || !(args.wd >= 0.0) {
        return Err(CliError::Usage("--lr must be positive and --wd non-negative".into()));
    }
    let stream = load_stream(&args.video, args.format, args.width, args.height)?;
    let video = TttVideo::from_stream(&stream, args.video_frames, args.features)
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let params = ToyParams::random(args.features, (args.map_rows, args.map_cols), args.seed);
    let adapter = LoraAdapter::zero_init(
        args.features,
        args.map_rows * args.map_cols,
        args.rank,
        args.alpha,
        LoraTarget::Mlp,
        args.seed.wrapping_add(1),
    );
    let cfg = TttConfig {
        n_frames: args.n,
        epochs: args.epochs,
        lr: args.lr,
        weight_decay: args.wd,
        n_templates: args.templates,
    };
    let base_snapshot = params.snapshot_bytes();
    let outcome = ttt_schedule(&video, &params, adapter, &cfg, args.seed.wrapping_add(2))
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    assert_eq!(
        params.snapshot_bytes(),
        base_snapshot,
        "base parameters must stay frozen"
    );

    let mut log = String::from("epoch,tracking_loss,consistency_loss,total\n");
    for row in &outcome.log {
        writeln!(
            log,
            "{},{:.4},{:.4},{:.4}",
            row.epoch, row.tracking_loss, row.consistency_loss, row.total
        )
        .unwrap();
    }
    write_file(&args.out.join("ttt_log.csv"), log.as_bytes())?;

    let boxes = predict_boxes(&video, &params, Some(&outcome.adapter))
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut predictions = String::new();
    for b in &boxes {
        writeln!(predictions, "{:.4},{:.4},{:.4},{:.4}", b.x, b.y, b.w, b.h).unwrap();
    }
    write_file(&args.out.join("predictions.txt"), predictions.as_bytes())?;

    println!("frames,{}", video.len());
    println!("epochs,{}", args.epochs);
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        println!("initial_total,{:.4}", first.total);
        println!("final_total,{:.4}", last.total);
    }
    Ok(())
}
