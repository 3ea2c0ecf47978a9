use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point:?} lies within {margin} of the domain boundary")]
    Boundary { point: Vec<f64>, margin: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("optimizer diverged at {params:?}")]
    Diverged { params: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty run: no samples to aggregate")]
    EmptyRun,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
