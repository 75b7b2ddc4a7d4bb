//! The GAPD iteration, its constant parameter schedule, the GDA baseline and
//! runtime monitors for the contraction bound and step-size conditions.

mod iterate;
mod monitor;
mod params;
mod run;

pub use iterate::{gapd_step, gda_step, Geometries, IterateState};
pub use monitor::{
    empirical_factor, lyapunov_check, lyapunov_check_at_rate, stepsize_condition_check, LyapunovReport,
    StepsizeReport, COND_C_RTOL, COND_C_SCALE_FLOOR,
};
pub use params::{derive_params, gda_steps, verify_params, GapdParams, GdaStepRule, GdaSteps, ParamCheck};
pub use run::{residual, run, ConvergenceTrace, Method, RecordPolicy, RunOptions, StepRecord, StopRule, TraceRecord};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::problems::ProblemError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no contractive schedule: alpha = {alpha} (moduli too small relative to smoothness)")]
    NoContractiveSchedule { alpha: f64 },
    #[error("parameter verification failed for {which}: {value:.3e}")]
    DerivationCheck { which: &'static str, value: f64 },
    #[error("non-finite value at iteration {k}")]
    NonFinite { k: usize },
    #[error("diverged at iteration {k}: residual {residual:.3e} exceeds 1e6 x initial {initial:.3e}")]
    Diverged { k: usize, residual: f64, initial: f64 },
    #[error("trace has no monitor data")]
    MissingMonitor,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}
