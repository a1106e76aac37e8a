mod commands;
mod config;
mod error;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = config::init_threads().and_then(|()| match &cli.command {
        Command::Rates(args) => commands::rates(args),
        Command::Loss(args) => commands::loss(args),
        Command::Classify(args) => commands::classify(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
