use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite value showed up while evaluating a kernel.
    #[error("numeric failure at option {index}: {message}")]
    Numeric { index: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("sweep has {cells} cells, above the cap of {cap}")]
    CellCap { cells: usize, cap: usize },

    #[error("trade log rejected: {malformed} of {total} rows malformed (first: {first})")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        first: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
