use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A resource limit that stopped a computation before it finished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapHit {
    pub cap: String,
    pub limit: u64,
    pub observed: u64,
}

impl std::fmt::Display for CapHit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} exceeded (limit {}, observed {})", self.cap, self.limit, self.observed)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("group {group:?} violates {identity}: {detail}")]
    BrokenGroupSpec {
        group: String,
        identity: String,
        detail: String,
    },
    #[error("generators have deficient rank (no element reaches levels {missing:?})")]
    RankDeficient { missing: Vec<usize> },
    #[error("diagonal entry {value} at level {level} is not a signed power of {p}")]
    NonPPowerDiagonal { level: usize, value: String, p: u64 },
    #[error("coordinate {value} is not {p}-local")]
    NonPLocal { value: String, p: u64 },
    #[error("containment violated: {0}")]
    ContainmentViolated(String),
    #[error("lattices live in different groups or prime modes")]
    Incompatible,
    #[error("{0}")]
    CapExceeded(CapHit),
    #[error("root envelope step has index p^{observed}, above the bound p^{bound}")]
    EnvelopeBound { observed: i64, bound: i64 },
    #[error("could not certify a floor: {0}")]
    FloorNotCertified(String),
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("missing local data: {0}")]
    MissingLocalData(String),
}

impl Error {
    pub fn cap(cap: &str, limit: u64, observed: u64) -> Self {
        Error::CapExceeded(CapHit { cap: cap.to_string(), limit, observed })
    }
}
