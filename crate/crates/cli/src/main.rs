mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compare(a) => commands::compare(a).map(drop),
        Command::Floats(a) => commands::floats(a).map(drop),
        Command::Piecewise(a) => commands::piecewise(a).map(drop),
        Command::Redundancy(a) => commands::redundancy(a).map(drop),
        Command::Recurrent(a) => commands::recurrent(a).map(drop),
        Command::Sssp(a) => commands::sssp(a).map(drop),
        Command::Selftest(a) => {
            if commands::selftest(a.seed) {
                Ok(())
            } else {
                return ExitCode::from(1);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
