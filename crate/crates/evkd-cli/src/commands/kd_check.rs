//! `evkd kd-check`: the loss self-test suite. Runs every loss kernel's
//! finite-difference gradient check plus the value oracles and prints one
//! line per check. Exits 1 if anything exceeds tolerance.

use std::path::PathBuf;

use clap::Args;
use evkd::gradcheck::{check_all_losses, check_value_oracles};
use evkd::losses::fixtures::{reference_fixtures, to_csv};

use crate::{write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct KdCheckArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Random instances per loss.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Emit a reference CSV fixture per loss into this directory.
    #[arg(long)]
    pub emit_fixtures: Option<PathBuf>,
}

pub fn run(args: &KdCheckArgs) -> CliResult {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut failures = 0usize;

    println!("check,trials,max_rel_error,tolerance,status");
    for check in check_all_losses(args.seed, args.trials) {
        let status = if check.passed() { "pass" } else { "FAIL" };
        if !check.passed() {
            failures += 1;
        }
        println!(
            "{},{},{:.4e},{:.4e},{status}",
            check.name, check.trials, check.max_rel_error, check.tolerance
        );
    }
    for oracle in check_value_oracles(args.seed, args.trials) {
        let status = if oracle.passed() { "pass" } else { "FAIL" };
        if !oracle.passed() {
            failures += 1;
        }
        println!(
            "{},{},{:.4e},{:.4e},{status}",
            oracle.name, args.trials, oracle.max_abs_error, oracle.tolerance
        );
    }

    if let Some(dir) = &args.emit_fixtures {
        for fixture in reference_fixtures() {
            write_file(&dir.join(format!("{}.csv", fixture.loss)), to_csv(&fixture).as_bytes())?;
        }
    }

    if failures > 0 {
        return Err(CliError::Invalid(format!("{failures} check(s) failed")));
    }
    Ok(())
}
