mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use cli::Cli;

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, missing required settings, unreadable config: exit 1.
    Usage(String),
    /// Problems with the data or a model: exit 2.
    Data(String),
}

impl From<mlcart::Error> for Failure {
    fn from(e: mlcart::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run `mlcart --help` for usage");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
