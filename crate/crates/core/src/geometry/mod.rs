//! Bregman geometry: distance-generating functions, simple feasible sets,
//! and the prox steps GAPD needs on each block.

mod generator;
mod prox;
mod set;

pub use generator::{CustomGenerator, Generator};
pub use prox::{check_nonexpansive, distance, project, prox_step, ProxOptions};
pub use set::SimpleSet;

use thiserror::Error;

use crate::qp::QpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point outside the generator domain at coordinate {index} (value {value})")]
    OutOfDomain { index: usize, value: f64 },
    #[error("prox step size inverse must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("prox subproblem did not converge in {0} iterations")]
    NotConverged(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Qp(#[from] QpError),
}
