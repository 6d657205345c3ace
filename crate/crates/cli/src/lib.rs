//! Command-line driver for the variational block-encoding toolkit.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod spec;

use config::{Cli, Command, RunConfig};
use error::{CliError, CliResult};

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Non-convergence or an exceeded cap; exit code 1.
    Failure,
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let run = cli.run.overlay(file.run).resolve();
    let dispatch = || match cli.command {
        Command::Encode(a) => commands::encode(&run, &a.overlay(file.encode)),
        Command::Sweep(a) => commands::sweep(&run, &a.overlay(file.sweep)),
        Command::Closure(a) => commands::closure(&run, &a.overlay(file.closure)),
        Command::Resources(a) => commands::resources(&run, &a.overlay(file.resources)),
        Command::Bench(a) => commands::bench(&run, &a.overlay(file.bench)),
    };
    match run.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(dispatch),
        None => dispatch(),
    }
}
