use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// A factorization that should succeed for valid inputs did not.
    #[error("numerical failure on {n1}x{n2} lattice (kappa_l={kappa_l}, kappa_f={kappa_f}): {detail}")]
    Numerical {
        n1: usize,
        n2: usize,
        kappa_l: f64,
        kappa_f: f64,
        detail: String,
    },

    #[error("internal linear algebra error: {0}")]
    Internal(String),

    #[error("degenerate trace: all chains are constant{}", .0.as_ref().map(|p| format!(" (parameter {p})")).unwrap_or_default())]
    DegenerateTrace(Option<String>),

    #[error("metric is unstable: {0}")]
    Unstable(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
