use std::process::ExitCode;

use clap::Parser;
use evkd_cli::{config, init_threads, run, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand_args(argv) {
        Ok(argv) => argv,
        Err(err) => {
            eprintln!("error: {}", err.message());
            return ExitCode::from(err.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        // clap prints help/version on stdout with exit 0 and usage errors
        // on stderr with exit 2.
        Err(err) => err.exit(),
    };
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
