use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time index {t} out of range 1..={max}")]
    TimeOutOfRange { t: usize, max: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive price {value} for asset {asset} at row {row}")]
    NonPositivePrice { asset: usize, row: usize, value: f64 },

    #[error("degenerate cross-section at row {row}: zero variance")]
    DegenerateRow { row: usize },

    #[error("epoch length {t} exceeds the {available} available rows")]
    EpochTooLong { t: usize, available: usize },

    #[error("eigensolver did not converge for epoch starting at row {start}")]
    EigenNonConvergence { start: usize },

    #[error("unexpected rank: expected {expected} nonzero eigenvalues, found {found}")]
    UnexpectedRank { expected: usize, found: usize },

    #[error("mixed epoch shapes: ({t1}, {n1}) vs ({t2}, {n2})")]
    MixedShapes { t1: usize, n1: usize, t2: usize, n2: usize },

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("work budget exceeded: {requested} > {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("no common Q values between the two reports")]
    DisjointGrids,

    #[error("missing input file {0}")]
    MissingInput(PathBuf),

    #[error("all assets were dropped during cleaning")]
    AllAssetsDropped,

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
