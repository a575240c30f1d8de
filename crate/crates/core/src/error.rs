use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid hyperparameter {name} = {value}: {reason}")]
    InvalidHyperParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("covariate {index} has no group assignment")]
    MissingGroup { index: usize },

    #[error("invalid knot grid: {0}")]
    InvalidKnots(String),

    #[error("value {value} at row {row}, column {col} is outside [0, 1]; scale covariates first")]
    OutOfUnitRange { row: usize, col: usize, value: f64 },

    #[error("{count} cells outside [0, 1], first at row {row}, column {col}; scale covariates first")]
    OutOfUnitRangeCells { count: usize, row: usize, col: usize },

    #[error("response must be binary (0/1) for the logistic model; found {value} at row {row}")]
    NonBinaryResponse { row: usize, value: f64 },

    #[error("labels contain a single class; need at least one positive and one negative")]
    SingleClass,

    #[error("column {column:?} is constant; cannot {operation}")]
    ConstantColumn {
        column: String,
        operation: &'static str,
    },

    #[error("column {column:?} has no observed values")]
    FullyMissingColumn { column: String },

    #[error("negative entry {value} at row {row}, column {column:?}; log(1+x) needs x >= 0")]
    NegativeEntry {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("data contains missing or non-finite values; impute before fitting")]
    NonFiniteData,

    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("response column {0:?} not found")]
    MissingResponse(String),

    #[error("missing response value at row {row}")]
    MissingResponseValue { row: usize },

    #[error("requested {requested} but only {available} available: {what}")]
    TooMany {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("every warmup transition diverged; try a higher target acceptance rate or check the parameterization")]
    AllDivergent,

    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),

    #[error("not enough draws for diagnostics: {chains} chains x {draws} draws")]
    TooFewDraws { chains: usize, draws: usize },

    #[error("{0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
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
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
