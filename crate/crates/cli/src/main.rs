mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run::execute(a),
        Command::Sweep(a) => commands::sweep::execute(a),
        Command::Bench(a) => commands::bench::execute(a),
        Command::Ed(a) => commands::ed::execute(a),
        Command::Analyze(a) => commands::analyze::execute(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
