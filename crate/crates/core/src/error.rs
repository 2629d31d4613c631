use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid geometry or cell counts.
    #[error("grid construction: {0}")]
    Construction(String),

    /// A configuration value violates a model or grid constraint.
    #[error("configuration: {0}")]
    Config(String),

    #[error("{kind} index {index} out of range (count {count})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },

    #[error("size mismatch for {what}: expected {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A stated precondition of a lemma or step (e.g. a time-step positivity
    /// condition) does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver failure ({method}): {message}")]
    Solver {
        method: &'static str,
        message: String,
        report: Option<SolveReport>,
    },

    #[error("step {step} ({stage}) failed: {source}")]
    Step {
        step: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn size(what: &'static str, expected: usize, got: usize) -> Self {
        Error::SizeMismatch { what, expected, got }
    }

    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Construction(_) | Error::Config(_) | Error::Parse(_) => 2,
            Error::Solver { .. } | Error::Step { .. } => 3,
            Error::Precondition(_) => 4,
            _ => 1,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::size(what, expected, got));
    }
    Ok(())
}
