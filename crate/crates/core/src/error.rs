use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Fock index {index} out of range for truncation dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error("degenerate state: trace {trace:e} is too small to normalise")]
    DegenerateState { trace: f64 },

    #[error("impossible post-selection at atom {step}: conditional trace {trace:e}")]
    ImpossiblePostselection { step: usize, trace: f64 },

    #[error("degenerate Q-function grid: every sample is zero")]
    DegenerateGrid,

    #[error("invalid run manifest: {}", .0.join("; "))]
    InvalidManifest(Vec<String>),

    #[error("malformed table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::OutOfRange { .. } => "out-of-range",
            Error::DegenerateState { .. } => "degenerate-state",
            Error::ImpossiblePostselection { .. } => "impossible-postselection",
            Error::DegenerateGrid => "degenerate-grid",
            Error::InvalidManifest(_) => "invalid-manifest",
            Error::Table(_) => "table",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
