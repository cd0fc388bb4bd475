use thiserror::Error;

/// Errors raised by exact p-adic computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precision must be positive, got {0}")]
    BadPrecision(i64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("division by a value indistinguishable from zero at the current precision")]
    DivisionByZero,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("point lies outside the domain ball")]
    OutsideDomain,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator outside the supported class: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
