use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular")]
    Singular,

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("generator row {row} is not primitive (coordinate gcd {gcd})")]
    NotPrimitive { row: usize, gcd: BigInt },

    #[error("vector is not in the cone: coordinate {index} is {value}")]
    NotInCone { index: usize, value: BigRational },

    #[error("{what} of size {size} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: BigInt,
        cap: u64,
    },

    #[error("no qualifying element of order {p} exists")]
    NotFound { p: BigInt },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("rejection budget of {0} draws exhausted")]
    RejectionBudget(u64),
}
