//! Config-driven batch runner for the `bayesgeo` estimators and audits.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

use std::path::PathBuf;

pub use config::{load_config, RunConfig};
pub use runner::{run, RunSummary};

/// Process exit status. Ordered by severity so a run reports its worst outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Pass,
    AuditFailure,
    Numerical,
    Config,
}

impl Exit {
    pub fn code(self) -> u8 {
        match self {
            Exit::Pass => 0,
            Exit::AuditFailure => 1,
            Exit::Config => 2,
            Exit::Numerical => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bayesgeo::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Core(bayesgeo::Error::Convergence { .. }) => Exit::Numerical,
            _ => Exit::Config,
        }
    }
}
