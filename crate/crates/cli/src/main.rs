use std::process::ExitCode;

use clap::Parser;
use vbe_cli::config::Cli;
use vbe_cli::Outcome;

fn main() -> ExitCode {
    match vbe_cli::run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
