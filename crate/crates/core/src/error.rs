use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("eigensolver did not converge for {0}")]
    NoConvergence(String),

    /// A complex eigenvalue without a conjugate partner. Signals either an
    /// eigensolver failure or a broken symmetry in the assembled matrix.
    #[error("conjugate-pairing integrity violation: {0}")]
    Integrity(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Range(_) | Error::Json(_) => 2,
            Error::Numerical { .. } | Error::NoConvergence(_) | Error::Integrity(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
