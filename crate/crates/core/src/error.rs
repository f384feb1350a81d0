use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid padding: graph of order {order} cannot be padded to {n}")]
    InvalidPadding { order: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("instance too large for exhaustive enumeration: {0}")]
    OracleScale(String),

    #[error("exact matcher refused: padded order {order} exceeds limit {limit} (use --force)")]
    ScaleGuard { order: usize, limit: usize },

    #[error("graduated assignment diverged at beta = {beta}")]
    AnnealingDiverged { beta: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset contains no graphs")]
    EmptyDataset,

    #[error("class labels are required for every pattern")]
    LabelsRequired,

    #[error("silhouette undefined: {0}")]
    SilhouetteUndefined(String),

    #[error("unknown graph id `{0}`")]
    UnknownId(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownId(_) | Error::LabelsRequired => 2,
            Error::Parse { .. } | Error::Schema(_) | Error::EmptyDataset | Error::Json(_) => 3,
            Error::ScaleGuard { .. } | Error::OracleScale(_) => 4,
            _ => 1,
        }
    }
}
