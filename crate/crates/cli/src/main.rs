use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(plc::cli::execute(plc::cli::Cli::parse()))
}
