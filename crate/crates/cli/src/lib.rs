//! Library surface of the `qbounce` CLI: argument/config resolution, file
//! formats, the population cache, and the command implementations. The
//! binary in `main.rs` is a thin dispatcher over [`commands`].

pub mod cache;
pub mod commands;
pub mod config;
pub mod io;

/// Error carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Usage, validation or I/O problems (exit code 2).
    Usage(anyhow::Error),
    /// The computation itself failed: diagnostics exceeded, solver failure
    /// (exit code 1).
    Compute(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Compute(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

pub fn compute_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Compute(e.into())
}
