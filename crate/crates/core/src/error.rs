use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the detection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("alphabet symbols must have unit modulus, found |{0}| != 1")]
    NonUnitModulus(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symbol {0} is not in the augmented alphabet")]
    SymbolOutsideAlphabet(f64),

    #[error("exhaustive search over {candidates} candidates exceeds the limit of {limit}")]
    EnumerationTooLarge { candidates: u128, limit: u128 },

    #[error("matrix lost numerical rank at column {0}")]
    RankDeficient(usize),
}
