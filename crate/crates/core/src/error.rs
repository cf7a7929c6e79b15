use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the toolkit.
///
/// Variants group into four families (input, numerical, sampling, io) so
/// front ends can map them onto stable exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("modularity is undefined for a graph without edges")]
    UndefinedModularity,

    #[error("degree sequence is not graphical: {0}")]
    NotGraphical(String),

    #[error("rewiring saturated: {achieved} of {requested} swaps after {attempts} attempts")]
    Saturation {
        achieved: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("configuration model rejected {attempts} stub matchings; use edge-swap randomisation instead")]
    Sampling { attempts: usize },

    #[error("generator infeasible after {attempts} attempts: {reason}")]
    Infeasible { attempts: usize, reason: String },

    #[error("generated modularity {achieved:.4} misses target {target:.4} by more than {tolerance}")]
    Tolerance {
        target: f64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("too many missing cells: {missing} of {total}")]
    TooManyMissing { missing: usize, total: usize },

    #[error("schema error: missing or invalid field `{0}`")]
    Schema(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 input, 3 numerical, 4 saturation/sampling.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Numerical(_) | Error::UndefinedModularity => 3,
            Error::Saturation { .. }
            | Error::Sampling { .. }
            | Error::Infeasible { .. }
            | Error::Tolerance { .. }
            | Error::TooManyMissing { .. } => 4,
            _ => 2,
        }
    }
}
