use nalgebra::DVector;

use super::{GapdParams, SolverError};
use crate::geometry::{prox_step, Generator, ProxOptions};
use crate::problems::{ProblemError, SaddleProblem};

/// Distance-generating functions for both blocks and the prox accuracy.
#[derive(Debug, Clone)]
pub struct Geometries {
    pub gen_x: Generator,
    pub gen_y: Generator,
    pub prox: ProxOptions,
}

impl Geometries {
    pub fn euclidean() -> Self {
        Self { gen_x: Generator::Euclidean, gen_y: Generator::Euclidean, prox: ProxOptions::default() }
    }

    pub fn is_euclidean(&self) -> bool {
        self.gen_x.is_euclidean() && self.gen_y.is_euclidean()
    }
}

/// Current and previous iterate with their gradients; `q` is the gradient
/// change between the two.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub x_prev: DVector<f64>,
    pub y_prev: DVector<f64>,
    pub gx: DVector<f64>,
    pub gy: DVector<f64>,
    pub qx: DVector<f64>,
    pub qy: DVector<f64>,
}

const FEAS_TOL: f64 = 1e-9;

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|t| t.is_finite())
}

impl IterateState {
    /// Initial state with `z_{-1} = z_0`, hence `q_0 = 0`.
    pub fn new(p: &dyn SaddleProblem, x0: DVector<f64>, y0: DVector<f64>) -> Result<Self, SolverError> {
        if x0.len() != p.dim_x() || y0.len() != p.dim_y() {
            return Err(ProblemError::Dimension(format!(
                "initial point has sizes ({}, {}), expected ({}, {})",
                x0.len(),
                y0.len(),
                p.dim_x(),
                p.dim_y()
            ))
            .into());
        }
        if !p.set_x().contains(&x0, FEAS_TOL) || !p.set_y().contains(&y0, FEAS_TOL) {
            return Err(ProblemError::Domain("initial point is not feasible".into()).into());
        }
        let gx = p.grad_x(&x0, &y0);
        let gy = p.grad_y(&x0, &y0);
        if !(finite(&gx) && finite(&gy)) {
            return Err(SolverError::NonFinite { k: 0 });
        }
        Ok(Self {
            k: 0,
            qx: DVector::zeros(x0.len()),
            qy: DVector::zeros(y0.len()),
            x_prev: x0.clone(),
            y_prev: y0.clone(),
            x: x0,
            y: y0,
            gx,
            gy,
        })
    }

    pub fn z(&self) -> DVector<f64> {
        crate::problems::stack(&self.x, &self.y)
    }

    fn advance(&self, p: &dyn SaddleProblem, x: DVector<f64>, y: DVector<f64>) -> Result<Self, SolverError> {
        let k = self.k + 1;
        if !(finite(&x) && finite(&y)) {
            return Err(SolverError::NonFinite { k });
        }
        let gx = p.grad_x(&x, &y);
        let gy = p.grad_y(&x, &y);
        if !(finite(&gx) && finite(&gy)) {
            return Err(SolverError::NonFinite { k });
        }
        Ok(Self {
            k,
            qx: &gx - &self.gx,
            qy: &gy - &self.gy,
            x_prev: self.x.clone(),
            y_prev: self.y.clone(),
            x,
            y,
            gx,
            gy,
        })
    }
}

/// One GAPD iteration. The dual step comes first and, for `θ > 0`, the
/// primal aggregate gradient is evaluated at the new dual point.
pub fn gapd_step(p: &dyn SaddleProblem, geo: &Geometries, params: &GapdParams, st: &IterateState) -> Result<IterateState, SolverError> {
    let lin_y = -(&st.gy + &st.qy * params.alpha);
    let y1 = prox_step(&geo.gen_y, p.set_y(), &lin_y, 1.0 / params.sigma, &st.y, &geo.prox)?;

    let theta = params.theta;
    let mut s = &st.gx * (1.0 - theta) + &st.qx * params.beta;
    if theta > 0.0 {
        let g_mid = p.grad_x(&st.x, &y1);
        if !finite(&g_mid) {
            return Err(SolverError::NonFinite { k: st.k + 1 });
        }
        s += g_mid * theta;
    }
    let x1 = prox_step(&geo.gen_x, p.set_x(), &s, 1.0 / params.tau, &st.x, &geo.prox)?;
    st.advance(p, x1, y1)
}

/// Simultaneous projected gradient descent on `x`, ascent on `y`.
pub fn gda_step(
    p: &dyn SaddleProblem,
    geo: &Geometries,
    step_x: f64,
    step_y: f64,
    st: &IterateState,
) -> Result<IterateState, SolverError> {
    if !(step_x > 0.0 && step_y > 0.0) {
        return Err(SolverError::InvalidParams(format!("GDA steps must be positive, got ({step_x}, {step_y})")));
    }
    let x1 = prox_step(&geo.gen_x, p.set_x(), &st.gx, 1.0 / step_x, &st.x, &geo.prox)?;
    let y1 = prox_step(&geo.gen_y, p.set_y(), &(-&st.gy), 1.0 / step_y, &st.y, &geo.prox)?;
    st.advance(p, x1, y1)
}
