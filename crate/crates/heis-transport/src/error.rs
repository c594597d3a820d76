//! Error type shared by every fallible operation in the crate.

use thiserror::Error;

/// Errors produced by geometry, solver, and I/O operations.
#[derive(Debug, Error)]
pub enum HeisError {
    /// Two points (or a point and an operator) live in groups of different index n.
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A grid does not cover the data it must contain; the message names the
    /// required enlargement.
    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// The optimization problem has no feasible point (e.g. unbalanced
    /// marginals, non-zero-mean right-hand side).
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// An iterative solver stopped without reaching its tolerance.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// A numerical guard tripped (division floor, trajectory leaving the grid, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HeisError>;
