use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the clustering core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range (must lie in {min}..={max})")]
    Range {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("initial joint eigenvector matrix is numerically singular (condition number {0:e})")]
    SingularInit(f64),

    #[error("iteration did not converge within {iterations} steps")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
