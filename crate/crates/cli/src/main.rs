mod args;
mod commands;
mod common;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use tora_core::ToraError;

use args::{Cli, Command};

/// Exit status for usage errors caught by the argument parser.
const EXIT_USAGE: u8 = 2;

fn report_error(code: &str, message: &str) {
    let line = serde_json::json!({ "error": code, "message": message });
    eprintln!("{line}");
}

fn run(cli: &Cli) -> Result<(), ToraError> {
    match &cli.command {
        Command::Transform(a) => commands::transform::run(a),
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TORA_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            report_error("configuration_error", msg.trim());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.code(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
