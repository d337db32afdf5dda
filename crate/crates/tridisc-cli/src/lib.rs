//! Command-line front end for the `tridisc` library: run configuration,
//! deterministic text/image output formats, and the four subcommands
//! (`orbits`, `zeta`, `resonances`, `distribution`).
//!
//! The binary maps failures onto exit codes: `0` success, `2` for invalid
//! configuration or requests (including selectors that match nothing),
//! `3` for numerical failures and I/O problems at run time.

use std::fmt;
use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{DomainChoice, RunConfig};

/// Process-level error: wraps library errors and adds configuration and
/// I/O failures that originate in the front end itself.
#[derive(Debug)]
pub enum CliError {
    /// A failure reported by the library.
    Lib(tridisc::Error),
    /// The configuration file or a flag value could not be used.
    Config(String),
    /// Reading or writing an output file failed.
    Io(PathBuf, std::io::Error),
}

impl CliError {
    /// Exit code for this failure: `2` for configuration problems and
    /// invalid requests, `3` for numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_invalid_input() => 2,
            CliError::Lib(_) => 3,
            CliError::Config(_) => 2,
            CliError::Io(..) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tridisc::Error> for CliError {
    fn from(e: tridisc::Error) -> Self {
        CliError::Lib(e)
    }
}
