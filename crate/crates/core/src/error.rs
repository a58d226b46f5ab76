use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("sample too small: need at least {needed} values, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("non-finite value in sample")]
    NonFinite,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("probability {0} outside the admissible range")]
    InvalidProbability(f64),

    #[error("degenerate column dispersion (column {column})")]
    DegenerateDispersion { column: usize },

    #[error("negative distance {0}")]
    NegativeDistance(f64),

    #[error("mask dimension mismatch: expected {expected_rows}x{expected_cols}, {detail}")]
    MaskDimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        detail: String,
    },

    #[error("mask parse error at line {line}: {msg}")]
    MaskParse { line: usize, msg: String },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("root finding failed: {0}")]
    RootNotBracketed(String),

    #[error("singular scatter update (condition number {0:e})")]
    SingularScatter(f64),

    #[error("non-identifiable missingness pattern: {0}")]
    NonIdentifiable(String),

    #[error("EMVE failed: no valid subsample")]
    EmveFailed,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("estimator requires n > 2p (n = {n}, p = {p})")]
    TooFewCases { n: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at row {row}, column {column}: {msg}")]
    Parse { row: usize, column: usize, msg: String },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("campaign failed: {0}")]
    CampaignFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDispersion { .. }
                | Error::DegenerateConfiguration(_)
                | Error::RootNotBracketed(_)
                | Error::SingularScatter(_)
                | Error::NonIdentifiable(_)
                | Error::EmveFailed
                | Error::NotPositiveDefinite
                | Error::CampaignFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
