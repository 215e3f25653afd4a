use thiserror::Error;

use crate::lp::LpError;

/// Errors raised by the domain types, builders and algorithms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid site set: {0}")]
    InvalidSites(String),

    #[error("degenerate site pair ({i}, {j}): sites coincide")]
    DegenerateSitePair { i: usize, j: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cluster count mismatch: expected {expected}, got {actual}")]
    ClusterMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is unbounded at t = {t}; choose a smaller t")]
    Unbounded { t: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("non-finite value in local optimization at iteration {iteration}")]
    NonFinite { iteration: usize, last: Box<crate::free_sites::LocalSolveReport> },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
