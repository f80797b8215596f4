use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input or a violated precondition.
    Usage,
    /// A desk-scale computational bound was hit.
    Bound,
    /// A mathematical invariant failed to hold. Always a bug or a genuine discrepancy.
    Invariant,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arity mismatch: expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not squarefree")]
    NotSquarefree(u64),
    #[error("vector {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("the action is not ergodic")]
    NotErgodic,
    #[error("rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },
    #[error("degree {degree} is below the required {required}")]
    DegreeTooLow { degree: u32, required: u32 },
    #[error("vectors are not linearly independent")]
    LinearlyDependent,
    #[error("no level has modulus coprime to k = {k} at depth {depth}; increase the depth")]
    NoCoprimeLevel { k: u64, depth: usize },
    #[error("found only {found} of {needed} deficient primes below {scan_bound}")]
    InsufficientPrimes { found: usize, needed: usize, scan_bound: u64 },
    #[error("polynomial has no degenerate linear combination")]
    NotDegenerate,
    #[error("no expansive direction found up to M = {cap}; best direction {best:?} carries mass {best_mass}")]
    DirectionCapExceeded { cap: u64, best: Vec<i64>, best_mass: f64 },
    #[error("no threshold found: psi stays at or above the target up to q = {scan_bound}")]
    NoThreshold { scan_bound: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{what} = {value} exceeds the desk-scale bound {bound}")]
    BoundExceeded { what: &'static str, value: u128, bound: u128 },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BoundExceeded { .. }
            | Error::InsufficientPrimes { .. }
            | Error::NoCoprimeLevel { .. }
            | Error::DirectionCapExceeded { .. }
            | Error::NoThreshold { .. } => ErrorKind::Bound,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Usage,
        }
    }

    pub(crate) fn bound(what: &'static str, value: impl Into<u128>, bound: impl Into<u128>) -> Self {
        Error::BoundExceeded { what, value: value.into(), bound: bound.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
