use thiserror::Error;

use crate::search::CurveRow;
use crate::certify::Certificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid lacunary ratio {0}: must be > 1")]
    InvalidRatio(f64),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid exponent {0}: must be >= 1")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("degenerate space: {0}")]
    DegenerateSpace(String),

    #[error("missing seed for randomized point generation")]
    MissingSeed,

    #[error("brute-force oracle limited to N <= 3, got N = {0}")]
    OracleTooLarge(usize),

    #[error("lemma hypothesis violated: {0}")]
    LemmaHypothesisViolated(String),

    #[error("budget exhausted after {attempts} attempts")]
    BudgetExhausted {
        attempts: usize,
        best: Box<Option<Certificate>>,
    },

    #[error("no m <= {m_max} reached the success threshold")]
    SearchFailed { m_max: usize, curve: Vec<CurveRow> },

    #[error("refused: {0}")]
    Refused(String),

    #[error("unbounded recovery constant: discretization constant C1 is zero")]
    Unbounded,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}
