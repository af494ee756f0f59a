use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid subsystem: {0}")]
    InvalidMask(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not normalized: max |psi^dag psi - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("QR orthonormalization failed at t = {time}: {reason}")]
    Orthonormalization { time: f64, reason: String },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("correlation eigenvalue {value} outside [0, 1] beyond tolerance")]
    BrokenCorrelation { value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("incomplete data: {0}")]
    Incomplete(String),

    #[error("malformed data file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
