use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcfError {
    #[error("alpha = {0} outside the admissible range (1/2, 1]")]
    AlphaOutOfRange(f64),

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("time step {dt} exceeds the stability bound {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("patch construction refused: {0}")]
    PatchRefused(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("malformed artifact {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GcfError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        GcfError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, GcfError>;
