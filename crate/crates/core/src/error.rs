use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("t = {t} lies outside the domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("non-finite value while evaluating {0}")]
    Evaluation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("unknown problem `{0}`")]
    NotFound(String),

    #[error("problem has no exact solution registered")]
    MissingExact,

    #[error("inconsistent chain: A_nu(0) is numerically singular")]
    InconsistentChain,

    #[error("initial value is inconsistent: algebraic residual {0:e}")]
    InconsistentInitialValue(f64),

    #[error("classification unreliable: pointwise index undefined at {undefined} of {total} samples")]
    ClassificationUnreliable { undefined: usize, total: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
