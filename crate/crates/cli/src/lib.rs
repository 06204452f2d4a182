//! Library side of the `dglab` binary: configuration, the four subcommands and
//! their flat-file outputs. `main.rs` only parses arguments and maps exit codes.

use std::path::{Path, PathBuf};

use dglab_core::certifier::CertifierError;
use dglab_core::functionals::FunctionalError;
use dglab_core::interval::IntervalError;
use dglab_core::kernels::KernelError;
use dglab_core::models::ModelError;
use thiserror::Error;

pub mod certify;
pub mod config;
pub mod kernel_table;
pub mod output;
pub mod selftest;
pub mod simulate;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("configuration is not valid JSON for this schema: {0}")]
    ConfigParse(#[source] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("JSON encoding failed: {0}")]
    Json(#[source] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Certifier(#[from] CertifierError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Creates `dir` (and parents) and returns it.
pub fn ensure_dir(dir: &Path) -> Result<&Path, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir)
}
