//! Command-line front end and HTTP companion service.
//!
//! [`commands`] holds the subcommands behind the `blockea` binary and
//! [`server`] the HTTP interface used by the editor.

pub mod commands;
pub mod server;

use std::path::PathBuf;

use blockea_core::block::{Diagnostic, XmlError};
use blockea_core::codegen::CodegenError;
use blockea_core::datalog::DatalogError;
use blockea_core::interp::RuntimeError;
use thiserror::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_HALT: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: Box<XmlError> },
    #[error("{path}: {} validation error(s)", .diagnostics.iter().filter(|d| d.is_error()).count())]
    Invalid { path: PathBuf, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Runtime(RuntimeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Export(DatalogError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Usage(_) => EXIT_INVALID,
            CliError::Runtime(RuntimeError::Invalid(_)) => EXIT_INVALID,
            CliError::Runtime(_) => EXIT_HALT,
            CliError::Io { .. } | CliError::Export(DatalogError::Io { .. }) => EXIT_IO,
            CliError::Export(_) => EXIT_FAILURE,
        }
    }
}

impl From<CodegenError> for CliError {
    fn from(e: CodegenError) -> Self {
        match e {
            CodegenError::Invalid(diagnostics) => CliError::Invalid { path: PathBuf::new(), diagnostics },
            CodegenError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Usage(other.to_string()),
        }
    }
}
