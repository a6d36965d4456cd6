use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (limit {limit})")]
    InvalidIndex { index: usize, limit: usize },

    #[error("normalizing function intractable at this size: state space of {states} exceeds the enumeration cap of {cap}")]
    Intractable { states: String, cap: u64 },

    #[error("exact sampling unavailable: {0}; use the double Metropolis-Hastings sampler instead")]
    ExactSamplingUnavailable(String),

    #[error("importance weights underflowed: |theta - reference| = {distance:.4} is too large for this pool")]
    WeightUnderflow { distance: f64 },

    #[error("effective sample size {ess:.1} below floor {floor} on hop {hop}; add particles or increase the pool size")]
    EssBelowFloor { ess: f64, floor: f64, hop: usize },

    #[error("matrix not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("diagnostic impractical at this dimension: r = {r} exceeds cap {cap}")]
    DiagnosticImpractical { r: usize, cap: usize },

    #[error("series of length {n} too short for batch size {batch}")]
    SeriesTooShort { n: usize, batch: usize },

    #[error("{0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trace I/O failed at iteration {iteration}: {source}")]
    TraceIo {
        iteration: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
