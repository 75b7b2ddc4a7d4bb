//! Saddle-point problems `min_x max_y f(x, y)` over simple sets, their
//! solution sets, and the fixtures used throughout the tests.

pub mod checks;
mod fixtures;
pub mod io;
mod quadratic;
mod solution;

pub use fixtures::{example1_fixture, example2_fixture, Example2};
pub use quadratic::{
    make_admissible_quadratic, make_fenchel, make_random_quadratic, ProblemMeta, QuadTerm, QuadraticSaddle,
    StructuredProblem,
};
pub use solution::{kkt_solution_set, SolutionKind, SolutionSet};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, SimpleSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported conjugate: {0}")]
    UnsupportedConjugate(String),
    #[error("no saddle point found: {0}")]
    NoSolution(String),
    #[error("active-set enumeration budget of {0} systems exceeded")]
    Budget(usize),
    #[error("point outside the problem domain: {0}")]
    Domain(String),
    #[error("malformed problem file: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Constants of the block-Lipschitz gradient assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    pub l_xx: f64,
    pub l_xy: f64,
    pub l_yx: f64,
    pub l_yy: f64,
}

impl SmoothnessConstants {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("L_xx", self.l_xx), ("L_xy", self.l_xy), ("L_yx", self.l_yx), ("L_yy", self.l_yy)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.l_yx <= 0.0 {
            return Err("L_yx must be strictly positive".into());
        }
        Ok(())
    }
}

/// A smooth convex-concave function with simple feasible sets.
/// Implementations must be pure so that concurrent evaluation is safe.
pub trait SaddleProblem: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn eval_f(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64;
    fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64>;
    fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64>;
    fn set_x(&self) -> &SimpleSet;
    fn set_y(&self) -> &SimpleSet;
    fn smoothness(&self) -> SmoothnessConstants;
}

/// Split a stacked `z = (x, y)`.
pub fn split(p: &dyn SaddleProblem, z: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>), ProblemError> {
    let (n, m) = (p.dim_x(), p.dim_y());
    if z.len() != n + m {
        return Err(ProblemError::Dimension(format!("z has {} entries, expected {}", z.len(), n + m)));
    }
    Ok((z.rows(0, n).into_owned(), z.rows(n, m).into_owned()))
}

pub fn stack(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    crate::linalg::vconcat(&[x, y])
}

/// The monotone field `F(z) = (∇x f, -∇y f)`.
pub fn field_operator(p: &dyn SaddleProblem, z: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
    let (x, y) = split(p, z)?;
    Ok(stack(&p.grad_x(&x, &y), &(-p.grad_y(&x, &y))))
}

/// Euclidean projection onto `X × Y`.
pub fn project_feasible(p: &dyn SaddleProblem, z: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
    let (x, y) = split(p, z)?;
    Ok(stack(&p.set_x().project_euclidean(&x)?, &p.set_y().project_euclidean(&y)?))
}
