use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    /// The tracked eigenvalue came closer than `gap_min` to another one.
    #[error("spectral gap {gap:.3e} below minimum {gap_min:.3e} at step {step}")]
    GapViolation { step: usize, gap: f64, gap_min: f64 },

    #[error("step {step} too coarse: {reason}")]
    StepTooCoarse { step: usize, reason: String },

    #[error("non-finite state at step {step}")]
    NumericalBlowup { step: usize },

    /// Zero variance kernel: the transition density is a point mass.
    #[error("degenerate density: variance kernel is zero")]
    DegenerateDensity,

    /// More than the tolerated fraction of ensemble members failed.
    #[error("{aborted} of {total} trajectories aborted")]
    TooManyAborts { aborted: usize, total: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Configuration(_) => 1,
            Error::GapViolation { .. }
            | Error::StepTooCoarse { .. }
            | Error::NumericalBlowup { .. }
            | Error::DegenerateDensity
            | Error::TooManyAborts { .. } => 2,
            Error::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
