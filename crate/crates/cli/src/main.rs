//! `nors` command-line entry point.

use std::process::ExitCode;

use clap::Parser;
use nors_cli::Cli;

fn main() -> ExitCode {
    match nors_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
