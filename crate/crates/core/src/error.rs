use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong across ingestion, fitting and prediction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid event series: {0}")]
    InvalidEvents(String),

    #[error("too few events: need at least {needed}, got {got}")]
    TooFewEvents { needed: usize, got: usize },

    #[error("every optimizer start converged to the branching-ratio boundary {boundary}")]
    NonStationaryFit { boundary: f64 },

    #[error("price moves are one-sided: need at least one upward and one downward move")]
    OneSidedData,

    #[error("a price move of zero cannot be classified")]
    ZeroDelta,

    #[error("stationary distribution did not converge: {0}")]
    NonConvergent(String),

    #[error("fundamental matrix is singular (condition estimate {condition:.3e})")]
    SingularFundamentalMatrix { condition: f64 },

    #[error("unknown file format `{0}`")]
    UnknownFormat(String),

    #[error("{path}: rejected {rejected} of {total} rows, above the allowed ratio {max_ratio}")]
    RejectRatioExceeded {
        path: PathBuf,
        rejected: usize,
        total: usize,
        max_ratio: f64,
    },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("window of {window}s admits {windows} disjoint windows, need {needed}")]
    WindowTooLarge {
        window: f64,
        windows: usize,
        needed: usize,
    },

    #[error("deviation curve is degenerate: {0}")]
    DegenerateCurve(String),

    #[error("{kind}: {source}")]
    KindFailed {
        kind: crate::states::ModelKind,
        #[source]
        source: Box<Error>,
    },

    #[error("every model kind failed to fit: {0}")]
    AllKindsFailed(String),

    #[error("report has no scored windows")]
    EmptyReport,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage or configuration, 2 data, 3 every
    /// model kind failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::UnknownFormat(_) => 1,
            Error::AllKindsFailed(_) => 3,
            _ => 2,
        }
    }

    /// Strips any `KindFailed` wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::KindFailed { source, .. } => source.root(),
            other => other,
        }
    }
}
