//! Reproducible DeepJAM experiments driven from the command line.
//!
//! Every command reads its inputs, validates them, writes its outputs
//! atomically into an output directory guarded by a lockfile and records
//! itself in that directory's `run.json`.

use std::fmt;

use deepjam_core::Error as CoreError;

pub mod cli;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod manifest;
pub mod results;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration, arguments or input files.
    Validation,
    /// I/O and other failures outside the caller's control.
    Runtime,
    /// Training diverged.
    Convergence,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ErrorKind::Validation, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ErrorKind::Runtime, error: error.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => EXIT_VALIDATION,
            ErrorKind::Runtime => EXIT_RUNTIME,
            ErrorKind::Convergence => EXIT_CONVERGENCE,
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError { kind: self.kind, error: self.error.context(msg) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::NonFiniteLoss { .. }
            | CoreError::NonFiniteGradient { .. }
            | CoreError::Antipodal(_)
            | CoreError::OrthantViolation { .. } => ErrorKind::Convergence,
            CoreError::Io(_) => ErrorKind::Runtime,
            _ => ErrorKind::Validation,
        };
        CliError { kind, error: e.into() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Adds context to core errors while keeping their category.
pub trait CoreContext<T> {
    fn ctx(self, msg: impl fmt::Display + Send + Sync + 'static) -> CliResult<T>;
}

impl<T> CoreContext<T> for Result<T, CoreError> {
    fn ctx(self, msg: impl fmt::Display + Send + Sync + 'static) -> CliResult<T> {
        self.map_err(|e| CliError::from(e).context(msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_categories() {
        let code = |e: CoreError| CliError::from(e).exit_code();
        assert_eq!(code(CoreError::Config("x".into())), EXIT_VALIDATION);
        assert_eq!(code(CoreError::GridMismatch("x".into())), EXIT_VALIDATION);
        assert_eq!(code(CoreError::NonFiniteLoss { iteration: 3, loss: f64::NAN }), EXIT_CONVERGENCE);
        assert_eq!(code(CoreError::Io(std::io::Error::other("disk"))), EXIT_RUNTIME);
        let e = CliError::from(CoreError::Shape("bad".into())).context("reading data");
        assert_eq!(e.to_string(), "reading data: shape mismatch: bad");
    }
}
