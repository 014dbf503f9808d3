use alloc::string::String;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("warm start rejected: {0}")]
    InvalidWarmStart(String),
    #[error("simplex numerical failure: {0}")]
    Numerical(String),
    #[error("problem is unbounded")]
    Unbounded,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("no incumbent found within the budget")]
    NoIncumbent,
    #[error("point is not stationary: {0}")]
    NotStationary(String),
    #[error("too many patterns: {count} exceeds the limit {limit}")]
    ScopeTooLarge { count: usize, limit: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
