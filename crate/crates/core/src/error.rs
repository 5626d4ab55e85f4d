use thiserror::Error;

/// Errors raised by the numeric routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("vector is not unit norm (norm = {norm})")]
    NotUnit { norm: f64 },

    #[error("invalid sparsity k = {k} for dimension n = {n}")]
    InvalidSparsity { k: usize, n: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("degenerate directions: u and v are parallel or antiparallel")]
    DegenerateDirections,

    #[error("parameter `{name}` = {value} outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(
        "error bound violated in trial {trial} at iteration {iter}: d_S = {d_s}, bound = {bound}"
    )]
    Lemma1Violation {
        trial: usize,
        iter: usize,
        d_s: f64,
        bound: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    domain: &'static str,
    ok: bool,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain,
        })
    }
}
