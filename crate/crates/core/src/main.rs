use std::process::ExitCode;

use clap::Parser;
use pimc_ho::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pimc-ho: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
