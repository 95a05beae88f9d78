//! File formats, configuration, parallel execution and the `magfold`
//! command-line tool on top of `magfold-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data_io;
pub mod error;
pub mod parallel;
pub mod report;

pub use error::{AppError, AppResult};

use cli::{Cli, Command};

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> AppResult<()> {
    match &cli.command {
        Command::Fit(args) => {
            let report = commands::fit(args)?;
            println!("{}", report.pretty());
        }
        Command::Simulate(args) => {
            let out = commands::simulate(args)?;
            println!("wrote {}", out.display());
        }
        Command::Study(args) => {
            commands::study(args)?;
        }
    }
    Ok(())
}
