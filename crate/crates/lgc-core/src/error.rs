use std::path::PathBuf;

/// Errors produced by the sampling, analysis, and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A walk hit a non-finite loss or gradient; the offending position and
    /// step index are carried for diagnosis.
    #[error("non-finite {quantity} in walk {walk_id} at step {step}")]
    NonFinite {
        walk_id: u64,
        step: usize,
        quantity: &'static str,
        position: Vec<f64>,
    },

    /// Hessian dimensionality above the configured cap; callers record the
    /// step as curvature-skipped rather than silently dropping it.
    #[error("hessian dimension {dim} exceeds cap {cap}")]
    HessianCapExceeded { dim: usize, cap: usize },

    #[error("eigensolver did not converge: {0}")]
    EigenNoConvergence(String),

    #[error("mixed experiment cells: {0}")]
    MixedCells(String),

    #[error("{path}:{line}: {msg}")]
    ParseRow {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("unknown label {label:?} at {path}:{line}")]
    UnknownLabel {
        label: String,
        path: String,
        line: u64,
    },

    #[error("invalid data in {path}: {msg}")]
    InvalidData { path: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("render error: {0}")]
    Render(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
