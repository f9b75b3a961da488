//! Batch front end for the road-metric experiments: configuration parsing,
//! one runner per subcommand, output emitters and the verification battery.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config key `{key}` (line {line}): {msg}")]
    Config {
        key: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Model(#[from] roadmetric::Error),
    #[error("check failed: {0}")]
    Invariant(String),
    #[error("{}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
}

impl CliError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            msg: e.to_string(),
        }
    }

    /// 1 usage or configuration, 2 failed check, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Model(roadmetric::Error::Io(_)) => 3,
            CliError::Model(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
