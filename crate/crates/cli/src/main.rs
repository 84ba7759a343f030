mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("numerical failure in {stage}: {message}")]
    Numerical { stage: String, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = config::Cli::parse();
    let result = config::resolve(cli).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
