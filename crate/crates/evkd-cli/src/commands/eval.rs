//! `evkd eval`: score tracker result files against a dataset.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use evkd::dataset::{
    build_track_run, load_manifest, load_result_file, validate_dataset, DatasetProfile, Split,
};
use evkd::metrics::{aggregate, attribute_breakdown, report, TrackRun};

use crate::{write_file, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    /// Geometry checks only: fits small fixtures.
    Lenient,
    /// Full EventVOT expectations (841/18/282 videos, 499 frames).
    Eventvot,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of per-video result files, `<video_id>.txt`.
    #[arg(long)]
    pub results: PathBuf,
    /// Dataset root.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Which split to evaluate.
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = ProfileArg::Lenient)]
    pub profile: ProfileArg,
    /// Metric report CSV path.
    #[arg(long)]
    pub report: PathBuf,
    /// Also write per-curve CSVs into this directory.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Also write an SVG plot of the three curves.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Append per-attribute SR rows to the report.
    #[arg(long)]
    pub attributes: bool,
}

pub fn run(args: &EvalArgs) -> CliResult {
    let loaded =
        load_manifest(&args.dataset).map_err(|e| CliError::Invalid(e.to_string()))?;
    let profile = match args.profile {
        ProfileArg::Lenient => DatasetProfile::lenient(),
        ProfileArg::Eventvot => DatasetProfile::eventvot(),
    };
    let validation = validate_dataset(&loaded, &profile);
    if !validation.is_clean() {
        for finding in &validation.findings {
            eprintln!("finding: {:?} {}", finding.kind, finding.message);
        }
        return Err(CliError::Invalid(format!(
            "dataset failed validation with {} finding(s)",
            validation.findings.len()
        )));
    }

    let wanted: Vec<&str> = match args.split {
        SplitArg::Train => loaded.manifest.split_ids(Split::Train),
        SplitArg::Val => loaded.manifest.split_ids(Split::Val),
        SplitArg::Test => loaded.manifest.split_ids(Split::Test),
        SplitArg::All => loaded.manifest.videos.iter().map(|v| v.id.as_str()).collect(),
    };
    if wanted.is_empty() {
        return Err(CliError::Invalid("selected split contains no videos".into()));
    }

    let mut runs: Vec<TrackRun> = Vec::with_capacity(wanted.len());
    for id in wanted {
        let result_path = args.results.join(format!("{id}.txt"));
        if !result_path.exists() {
            return Err(CliError::Invalid(format!(
                "no result file for `{id}` at {}",
                result_path.display()
            )));
        }
        let predicted =
            load_result_file(&result_path).map_err(|e| CliError::Invalid(e.to_string()))?;
        let annotations = loaded
            .annotations
            .get(id)
            .ok_or_else(|| CliError::Invalid(format!("no annotations loaded for `{id}`")))?;
        let record = loaded.manifest.video(id).expect("id came from the manifest");
        let run = build_track_run(id, predicted, annotations, record.attributes.clone())
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        runs.push(run);
    }

    let summary = aggregate(&runs).map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut report_csv = report::metrics_csv(&summary);
    if args.attributes {
        let breakdown =
            attribute_breakdown(&runs).map_err(|e| CliError::Invalid(e.to_string()))?;
        for (attr, sr) in breakdown {
            writeln!(report_csv, "SR_{attr},{sr:.4}").unwrap();
        }
    }
    write_file(&args.report, report_csv.as_bytes())?;

    if let Some(dir) = &args.curves {
        write_file(&dir.join("success.csv"), report::curve_csv(&summary.success).as_bytes())?;
        write_file(
            &dir.join("precision.csv"),
            report::curve_csv(&summary.precision).as_bytes(),
        )?;
        write_file(
            &dir.join("normalized_precision.csv"),
            report::curve_csv(&summary.normalized_precision).as_bytes(),
        )?;
    }
    if let Some(path) = &args.svg {
        write_file(path, report::curves_svg(&summary).as_bytes())?;
    }

    println!("videos,{}", summary.videos);
    println!("SR,{:.4}", summary.sr);
    println!("PR,{:.4}", summary.pr);
    println!("NPR,{:.4}", summary.npr);
    Ok(())
}
