//! Command-line front end for time-varying threshold SETAR models: CSV
//! ingestion, TOML run configuration, the `simulate`, `fit`, `bootstrap` and
//! `replicate` commands, and result bundles.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod ingest;

use std::path::Path;

pub use bundle::{Bundle, ResultDocument, Table};
pub use commands::{execute, run};
pub use config::{Command, Overrides, RunConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FIT: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error at {field}: {message}")]
    Config { field: String, message: String },

    /// Line numbers count the header as line 1; 0 means the whole input.
    #[error("input error at line {line}: {message}")]
    Ingest { line: u64, message: String },

    #[error(transparent)]
    Model(#[from] tvsetar::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn ingest(line: u64, message: impl Into<String>) -> Self {
        CliError::Ingest {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 2 for bad configuration or input, 3 when estimation fails, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use tvsetar::Error as E;
        match self {
            CliError::Config { .. } | CliError::Ingest { .. } => EXIT_CONFIG,
            CliError::Model(E::FitFailed(_) | E::DegenerateRegime { .. } | E::BootstrapUnstable { .. }) => EXIT_FIT,
            CliError::Model(_) => EXIT_CONFIG,
            CliError::Io { .. } => 1,
        }
    }
}
