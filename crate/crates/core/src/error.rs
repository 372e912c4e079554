use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter is outside its admissible range. `field` is the
    /// parameter name as it appears on the command line.
    #[error("invalid value for --{field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("tuple space d^k = {d}^{k} exceeds the supported maximum of {max} tuples")]
    TupleSpaceOverflow { d: u64, k: usize, max: u64 },

    /// An enumeration would exceed the configured size guard.
    #[error("{what} of size {size} exceeds the guard of {limit} (raise the limit or force)")]
    GuardExceeded { what: &'static str, size: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("symmetry mapping requires binary constraints, found arity {0}")]
    NotBinary(usize),

    #[error("invalid symmetry quadruple: {0}")]
    InvalidQuadruple(String),

    #[error("literal index space overflow: {0} boolean variables")]
    LiteralOverflow(u64),

    #[error("experiments need at least two trials, got {0}")]
    TooFewTrials(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
