//! `labelrefine` command-line tool.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use labelrefine::event_log::EventLogError;
use labelrefine::process_model::ProcessModelError;
use labelrefine::refinement::RefinementError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Log { path: String, source: EventLogError },

    #[error("{path}: {source}")]
    Net { path: String, source: ProcessModelError },

    #[error("{0}: no events")]
    NoEvents(String),

    #[error("{0}")]
    Config(String),

    #[error("{path}: invalid manifest: {source}")]
    Manifest { path: String, source: serde_json::Error },

    #[error("{0}")]
    InputChanged(String),

    #[error("replay did not reproduce the recorded outputs")]
    ReplayMismatch,

    #[error(transparent)]
    Refinement(RefinementError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for unusable input, 64 for bad configuration, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } | Self::Log { .. } | Self::Net { .. } | Self::NoEvents(_) | Self::Manifest { .. } | Self::InputChanged(_) => 2,
            Self::Config(_) | Self::Refinement(RefinementError::Config(_)) => 64,
            Self::Refinement(_) | Self::Json(_) | Self::ReplayMismatch => 1,
        }
    }
}

impl From<RefinementError> for CliError {
    fn from(e: RefinementError) -> Self {
        Self::Refinement(e)
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
