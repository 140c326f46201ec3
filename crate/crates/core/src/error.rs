use std::path::PathBuf;

use thiserror::Error;

use crate::model::SpecViolation;

pub type Result<T, E = AlaamError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AlaamError {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("line {line}: node index {index} out of range for n = {n}")]
    Bounds { line: usize, index: usize, n: usize },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model specification: {}", join_violations(.0))]
    Spec(Vec<SpecViolation>),

    #[error("configuration error: {0}")]
    Config(String),

    /// A method was asked to run outside the conditions it is defined for,
    /// e.g. evidence under an improper prior.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Sampler divergence or a numerically degenerate quantity.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[SpecViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
