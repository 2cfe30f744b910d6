use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not monotone: smallest eigenvalue of its symmetric part is {min_eigenvalue:e}")]
    NonMonotone { min_eigenvalue: f64 },

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid operator spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    /// The grid minimizer sits on the search window boundary after the final
    /// refinement, so the true minimizer may lie outside the window.
    #[error("prox search window exhausted along axis {axis}")]
    WindowExhausted { axis: usize },

    #[error("non-finite iterate at step {step}")]
    NonFinite { step: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("unsupported set kind for {0}")]
    Unsupported(&'static str),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("malformed parameter `{key}`: {reason}")]
    BadParam { key: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
