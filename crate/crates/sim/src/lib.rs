//! Command-line companion to `frontier-core`: config files, subcommand
//! dispatch, CSV outputs and run manifests.

use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{dispatch, Status};
pub use config::{parse_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error in {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] frontier_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}
