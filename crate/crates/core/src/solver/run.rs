use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{gapd_step, gda_step, GapdParams, GdaSteps, Geometries, IterateState, SolverError};
use crate::problems::{split, SaddleProblem, SolutionSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Gapd(GapdParams),
    Gda(GdaSteps),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gapd(_) => "gapd",
            Method::Gda(_) => "gda",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Method::Gapd(p) => Some(p.theta),
            Method::Gda(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once the residual falls to `rel_tol` times its initial value.
    pub rel_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 100_000, rel_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordPolicy {
    Every,
    /// Every iteration up to 100, then every 10th, plus the final one.
    Thinned,
}

impl RecordPolicy {
    fn keeps(self, k: usize) -> bool {
        match self {
            RecordPolicy::Every => true,
            RecordPolicy::Thinned => k <= 100 || k % 10 == 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions<'a> {
    /// Solution set for distances and the contraction monitor.
    pub monitor: Option<&'a SolutionSet>,
    pub record: RecordPolicy,
    /// Record the per-step quantities of the third step-size condition
    /// (GAPD with a derived schedule only).
    pub step_monitor: bool,
    /// Off makes traces bitwise reproducible, elapsed times included.
    pub timing: bool,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self { monitor: None, record: RecordPolicy::Thinned, step_monitor: false, timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub residual: f64,
    pub residual_rel: f64,
    /// Squared Euclidean distance to Z*.
    pub dist_sq: Option<f64>,
    /// `(1/τ - γxβ) Dx(x̄, x) + (1/σ - γyα) Dy(ȳ, y)`.
    pub lyapunov: Option<f64>,
    pub elapsed_ns: u64,
}

/// Quantities of step `k -> k+1` for the third step-size condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub lambda: f64,
    /// Left-hand side of the condition; it should be nonpositive.
    pub surplus: f64,
    /// Sum of magnitudes of the terms in `surplus`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub method: String,
    pub theta: Option<f64>,
    pub records: Vec<TraceRecord>,
    pub steps: Vec<StepRecord>,
    pub initial_residual: f64,
    /// `(1/τ) Dx(x̄₀, x₀) + (1/σ) Dy(ȳ₀, y₀)`, GAPD with a monitor only.
    pub bregman_dist0: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    /// First recorded iteration whose relative residual is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.residual_rel <= tol).map(|r| r.k)
    }
}

/// Natural residual `‖z - P_{X×Y}(z - F(z))‖`.
pub fn residual(p: &dyn SaddleProblem, z: &DVector<f64>) -> Result<f64, SolverError> {
    let (x, y) = split(p, z)?;
    residual_from(p, &x, &y, &p.grad_x(&x, &y), &p.grad_y(&x, &y))
}

fn residual_from(
    p: &dyn SaddleProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    gx: &DVector<f64>,
    gy: &DVector<f64>,
) -> Result<f64, SolverError> {
    let px = p.set_x().project_euclidean(&(x - gx))?;
    let py = p.set_y().project_euclidean(&(y + gy))?;
    Ok(((x - px).norm_squared() + (y - py).norm_squared()).sqrt())
}

struct Monitor<'a> {
    set: &'a SolutionSet,
    weights: Option<(f64, f64)>,
}

impl Monitor<'_> {
    fn eval(&self, p: &dyn SaddleProblem, geo: &Geometries, st: &IterateState) -> Result<(f64, Option<f64>), SolverError> {
        let z = st.z();
        let zb = self.set.project(&z)?;
        let dist_sq = (&z - &zb).norm_squared();
        let lyap = match self.weights {
            Some((wx, wy)) => {
                let (xb, yb) = split(p, &zb)?;
                Some(wx * geo.gen_x.bregman(&xb, &st.x)? + wy * geo.gen_y.bregman(&yb, &st.y)?)
            }
            None => None,
        };
        Ok((dist_sq, lyap))
    }
}

/// Left-hand side of the third step-size condition for the step `s0 -> s1`,
/// with `t_{k+1}/t_k = 1/α`.
fn step_record(geo: &Geometries, prm: &GapdParams, s0: &IterateState, s1: &IterateState) -> Result<StepRecord, SolverError> {
    let sm = prm.smoothness.expect("step monitor requires a derived schedule");
    let (alpha, beta, theta) = (prm.alpha, prm.beta, prm.theta);
    let dx = &s1.x - &s0.x;
    let dy = &s1.y - &s0.y;
    let w = 1.0 - theta;
    let nq1 = (s1.qx.norm_squared() + s1.qy.norm_squared()).sqrt();
    let ndz = (w * w * prm.l_psi_x.powi(2) * dx.norm_squared() + prm.l_psi_y.powi(2) * dy.norm_squared()).sqrt();
    let cross_x = -beta * s0.qx.dot(&dx);
    let cross_y = -alpha * s0.qy.dot(&dy);
    let dxb = (1.0 / prm.tau - theta * sm.l_xx) * geo.gen_x.bregman(&s1.x, &s0.x)?;
    let dyb = geo.gen_y.bregman(&s1.y, &s0.y)? / prm.sigma;
    let lambda = cross_x + cross_y - dxb - dyb;
    let qq = |s: &IterateState| beta / prm.gamma_x * s.qx.norm_squared() + alpha / prm.gamma_y * s.qy.norm_squared();
    let (q0, q1) = (0.5 * qq(s0), qq(s1) / (2.0 * alpha));
    let surplus = nq1 * ndz + lambda - q0 + q1;
    let scale = nq1 * ndz + cross_x.abs() + cross_y.abs() + dxb.abs() + dyb.abs() + q0 + q1;
    Ok(StepRecord { k: s0.k, lambda, surplus, scale })
}

/// Iterate `method` from `(x0, y0)` until the stopping rule fires.
pub fn run(
    p: &dyn SaddleProblem,
    geo: &Geometries,
    method: &Method,
    x0: DVector<f64>,
    y0: DVector<f64>,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<ConvergenceTrace, SolverError> {
    if !(stop.rel_tol >= 0.0) {
        return Err(SolverError::InvalidParams(format!("rel_tol must be nonnegative, got {}", stop.rel_tol)));
    }
    if let Method::Gapd(prm) = method {
        if opts.step_monitor && !prm.has_schedule() {
            return Err(SolverError::InvalidParams("step monitor needs a derived schedule".into()));
        }
    }
    let start = Instant::now();
    let elapsed = |on: bool| if on { start.elapsed().as_nanos() as u64 } else { 0 };

    let mut st = IterateState::new(p, x0, y0)?;
    let r0 = residual_from(p, &st.x, &st.y, &st.gx, &st.gy)?;
    let monitor = opts.monitor.map(|set| Monitor {
        set,
        weights: match method {
            Method::Gapd(prm) => Some(prm.lyapunov_weights()),
            Method::Gda(_) => None,
        },
    });

    let mut records = Vec::new();
    let mut steps = Vec::new();
    let rel = |r: f64| if r0 > 0.0 { r / r0 } else { 0.0 };
    let mut bregman_dist0 = None;
    let record = |st: &IterateState, r: f64, out: &mut Vec<TraceRecord>| -> Result<(), SolverError> {
        let (dist_sq, lyapunov) = match &monitor {
            Some(m) => {
                let (d, l) = m.eval(p, geo, st)?;
                (Some(d), l)
            }
            None => (None, None),
        };
        out.push(TraceRecord { k: st.k, residual: r, residual_rel: rel(r), dist_sq, lyapunov, elapsed_ns: elapsed(opts.timing) });
        Ok(())
    };
    if let (Some(m), Method::Gapd(prm)) = (&monitor, method) {
        let zb = m.set.project(&st.z())?;
        let (xb, yb) = split(p, &zb)?;
        bregman_dist0 = Some(geo.gen_x.bregman(&xb, &st.x)? / prm.tau + geo.gen_y.bregman(&yb, &st.y)? / prm.sigma);
    }
    record(&st, r0, &mut records)?;

    let mut converged = r0 == 0.0;
    if !converged {
        for _ in 0..stop.max_iters {
            let next = match method {
                Method::Gapd(prm) => gapd_step(p, geo, prm, &st)?,
                Method::Gda(s) => gda_step(p, geo, s.step_x, s.step_y, &st)?,
            };
            if let (true, Method::Gapd(prm)) = (opts.step_monitor, method) {
                if opts.record.keeps(st.k) {
                    steps.push(step_record(geo, prm, &st, &next)?);
                }
            }
            st = next;
            let r = residual_from(p, &st.x, &st.y, &st.gx, &st.gy)?;
            if !r.is_finite() {
                return Err(SolverError::NonFinite { k: st.k });
            }
            if r > 1e6 * r0 {
                return Err(SolverError::Diverged { k: st.k, residual: r, initial: r0 });
            }
            converged = r <= stop.rel_tol * r0;
            let last = converged || st.k == stop.max_iters;
            if last || opts.record.keeps(st.k) {
                record(&st, r, &mut records)?;
            }
            if converged {
                break;
            }
        }
    }
    Ok(ConvergenceTrace {
        method: method.name().into(),
        theta: method.theta(),
        records,
        steps,
        initial_residual: r0,
        bregman_dist0,
        iterations: st.k,
        converged,
        final_x: st.x.iter().cloned().collect(),
        final_y: st.y.iter().cloned().collect(),
    })
}
