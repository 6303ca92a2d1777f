//! `evkd voxelize`: event file -> dense voxel counts plus a JSON shape
//! descriptor.

use std::path::PathBuf;

use clap::Args;
use evkd::event::build_voxel_grid;

use super::{load_stream, FormatArg};
use crate::{write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct VoxelizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Cell width in pixels (must divide the sensor width).
    #[arg(long, default_value_t = 16)]
    pub a: u16,
    /// Cell height in pixels (must divide the sensor height).
    #[arg(long, default_value_t = 16)]
    pub b: u16,
    /// Cell depth in microseconds; defaults to a fifth of the time span.
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 1280)]
    pub width: u16,
    #[arg(long, default_value_t = 720)]
    pub height: u16,
}

pub fn run(args: &VoxelizeArgs) -> CliResult {
    if args.a == 0 || args.b == 0 || args.c == Some(0) {
        return Err(CliError::Usage("cell sizes must be positive".into()));
    }
    let stream = load_stream(&args.input, args.format, args.width, args.height)?;
    let span = stream
        .time_span()
        .map(|(lo, hi)| hi - lo + 1)
        .ok_or_else(|| CliError::Invalid("empty stream cannot be voxelized".into()))?;
    let c = args.c.unwrap_or_else(|| span.div_ceil(5).max(1));
    let grid = build_voxel_grid(&stream, args.a, args.b, c)
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut counts = Vec::with_capacity(grid.counts().len() * 4);
    for &v in grid.counts().iter() {
        counts.extend_from_slice(&v.to_le_bytes());
    }
    write_file(&args.out.join("voxels.bin"), &counts)?;

    let (nx, ny, nt) = grid.dims();
    let descriptor = serde_json::json!({
        "x_cells": nx,
        "y_cells": ny,
        "t_cells": nt,
        "cell_x_px": grid.cell_size().0,
        "cell_y_px": grid.cell_size().1,
        "cell_t_us": grid.cell_size().2,
        "t_origin_us": grid.t_origin(),
        "total_events": grid.total(),
        "layout": "t,y,x",
        "dtype": "u32le",
    });
    write_file(
        &args.out.join("voxels.json"),
        serde_json::to_string_pretty(&descriptor).unwrap().as_bytes(),
    )?;

    println!("dims,{nx},{ny},{nt}");
    println!("cell,{},{},{c}", args.a, args.b);
    println!("total_events,{}", grid.total());
    Ok(())
}
