use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("strategy with sigma = 0 is a point mass and has no density")]
    DegenerateStrategy,

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimated error {error_estimate:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("linear system is singular (lambda = {lambda})")]
    SingularSystem { lambda: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("non-numeric value {value:?} at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("dataset has {rows} rows, need at least {needed}")]
    InsufficientRows { rows: usize, needed: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
