//! Failures of the command-line driver and their exit codes.

use std::path::PathBuf;

use crate::config::Violation;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration ({} problem(s))", .0.len())]
    Config(Vec<Violation>),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] hystdiff::Error),
}

impl CliError {
    /// 2 for bad input, 3 for file trouble, 4 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    /// `(kind, key path, message)` rows for the error stream.
    pub fn records(&self) -> Vec<(String, String, String)> {
        match self {
            CliError::Config(list) => list
                .iter()
                .map(|v| ("config".to_string(), v.path.clone(), v.message.clone()))
                .collect(),
            CliError::Usage(m) => vec![("usage".into(), String::new(), m.clone())],
            CliError::Io { path, source } => vec![("io".into(), path.display().to_string(), source.to_string())],
            CliError::Csv(e) => vec![("io".into(), String::new(), e.to_string())],
            CliError::Solver(e) => vec![("solver".into(), String::new(), e.to_string())],
        }
    }
}
