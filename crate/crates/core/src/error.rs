use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transition row {row} is not stochastic (sum = {sum}, min = {min})")]
    NotStochastic { row: usize, sum: f64, min: f64 },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("stationary distribution did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("feature matrix is rank deficient: numerical rank {rank} < {expected} columns")]
    RankDeficient { rank: usize, expected: usize },

    #[error("Gram matrix is numerically singular (condition estimate {condition:e})")]
    SingularGram { condition: f64 },

    #[error("{what} is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { what: &'static str, condition: f64 },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("{quantity}: hypothesis violated: {detail}")]
    Domain {
        quantity: &'static str,
        detail: String,
    },

    #[error("generator gave up after {attempts} attempts: {reason}")]
    RetryBudgetExhausted { attempts: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(quantity: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            detail: detail.into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
