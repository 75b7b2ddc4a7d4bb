//! Growth conditions: Hoffman constants, moduli for the structured quadratic
//! class, and sampled certification of two-sided QFG / QGG.

mod certify;
mod hoffman;
mod moduli;

pub use certify::{certify_qfg, certify_qgg, qgg_implies_qfg_check, CertOptions, CertReport};
pub use hoffman::{hoffman_constant, hoffman_lower_bound, HoffmanMethod, HoffmanOptions, HoffmanResult};
pub use moduli::{derive_moduli, structured_moduli, xi_constants, ModuliDerivation, XiConstants, XiMode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::ProblemError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("matrix has no nonzero singular value")]
    ZeroMatrix,
    #[error("Hoffman enumeration limited to {limit} inequality rows, got {got}")]
    TooManyRows { limit: usize, got: usize },
    #[error("enumeration budget of {0} patterns exceeded")]
    Budget(usize),
    #[error("kernel inclusion {which} fails (relative residual {residual:.3e}) along direction {direction:?}")]
    KernelInclusion { which: &'static str, residual: f64, direction: Vec<f64> },
    #[error("growth modulus must be positive and finite, got {0}")]
    NonPositive(f64),
    #[error("generator gradient is not Lipschitz (L_psi infinite)")]
    InfiniteLipschitz,
    #[error("solution set has no polyhedral description")]
    NoDescription,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCondition {
    TwoSidedQfg,
    TwoSidedQgg,
    Both,
}

/// Which rule fixed ς.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarsigmaRule {
    /// ς = θ.
    Qfg,
    /// ς = 2(1 - θ).
    Qgg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthModuli {
    pub mu_x: f64,
    pub mu_y: f64,
    pub condition: GrowthCondition,
    /// False when the moduli come from constants whose hypotheses could not
    /// be verified.
    pub certified: bool,
}

impl GrowthModuli {
    pub fn new(mu_x: f64, mu_y: f64, condition: GrowthCondition) -> Result<Self, GrowthError> {
        for m in [mu_x, mu_y] {
            if !(m > 0.0 && m.is_finite()) {
                return Err(GrowthError::NonPositive(m));
            }
        }
        Ok(Self { mu_x, mu_y, condition, certified: true })
    }

    /// ς for the given θ. When both conditions hold the larger value is used.
    pub fn varsigma(&self, theta: f64) -> (f64, VarsigmaRule) {
        let qfg = theta;
        let qgg = 2.0 * (1.0 - theta);
        match self.condition {
            GrowthCondition::TwoSidedQfg => (qfg, VarsigmaRule::Qfg),
            GrowthCondition::TwoSidedQgg => (qgg, VarsigmaRule::Qgg),
            GrowthCondition::Both => {
                if qfg >= qgg {
                    (qfg, VarsigmaRule::Qfg)
                } else {
                    (qgg, VarsigmaRule::Qgg)
                }
            }
        }
    }

    pub fn with_condition(mut self, condition: GrowthCondition) -> Self {
        self.condition = condition;
        self
    }

    pub fn scaled(mut self, fx: f64, fy: f64) -> Self {
        self.mu_x *= fx;
        self.mu_y *= fy;
        self
    }
}
