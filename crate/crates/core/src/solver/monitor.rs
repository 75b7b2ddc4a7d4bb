use serde::{Deserialize, Serialize};

use super::params::rate_power;
use super::{verify_params, ConvergenceTrace, GapdParams, SolverError};
use crate::growth::GrowthModuli;
use crate::problems::SmoothnessConstants;

/// Relative tolerance on the third step-size condition.
pub const COND_C_RTOL: f64 = 1e-9;
/// Steps whose term scale is below this fraction of the first step's scale
/// sit at round-off level and are not judged.
pub const COND_C_SCALE_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// `max_K [lhs_K - α^K rhs]₊ / rhs`.
    pub max_violation: f64,
    pub worst_k: usize,
    pub rhs: f64,
    pub checked: usize,
}

/// Contraction check `lhs_K <= α^K rhs` along a monitored GAPD trace.
pub fn lyapunov_check(trace: &ConvergenceTrace, params: &GapdParams) -> Result<LyapunovReport, SolverError> {
    lyapunov_check_at_rate(trace, params.one_minus_alpha)
}

/// Same check against an arbitrary claimed rate `α = 1 - one_minus_alpha`.
pub fn lyapunov_check_at_rate(trace: &ConvergenceTrace, one_minus_alpha: f64) -> Result<LyapunovReport, SolverError> {
    let rhs = trace.bregman_dist0.ok_or(SolverError::MissingMonitor)?;
    let mut out = LyapunovReport { max_violation: 0.0, worst_k: 0, rhs, checked: 0 };
    for r in &trace.records {
        let lhs = r.lyapunov.ok_or(SolverError::MissingMonitor)?;
        let bound = rate_power(one_minus_alpha, r.k) * rhs;
        let excess = (lhs - bound).max(0.0);
        let v = if rhs > 0.0 {
            excess / rhs
        } else if excess > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if v > out.max_violation {
            out.max_violation = v;
            out.worst_k = r.k;
        }
        out.checked += 1;
    }
    Ok(out)
}

/// Per-iteration factor `exp(slope)` from a least-squares fit of
/// `ln(value)` against `k`. Values at or below `floor_rel` times the first
/// value are dropped as round-off.
pub fn empirical_factor(ks: &[usize], values: &[f64], floor_rel: f64) -> Option<f64> {
    let first = *values.first()?;
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0 && v > floor_rel * first)
        .map(|(&k, &v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mk = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mk).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mk) * (p.1 - mv)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some((sxy / sxx).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsizeReport {
    /// `|β - α(1-θ)| / (1 + β)`; the weight recursion `t_k = t_{k+1} α`
    /// holds by construction of `t_k = α^{-k}`.
    pub cond_a: f64,
    pub cond_b_x: f64,
    pub cond_b_y: f64,
    pub c_x: f64,
    pub c_y: f64,
    /// Largest `surplus / scale` over judged steps.
    pub cond_c_max_ratio: Option<f64>,
    pub cond_c_worst_k: Option<usize>,
    pub cond_c_checked: usize,
    pub cond_c_skipped: usize,
    pub algebraic_tol: f64,
    pub passed: bool,
}

/// Report on the step-size conditions: the algebraic ones by substitution,
/// the third one ex post along a trace recorded with the step monitor.
pub fn stepsize_condition_check(
    params: &GapdParams,
    sm: &SmoothnessConstants,
    moduli: &GrowthModuli,
    trace: Option<&ConvergenceTrace>,
) -> Result<StepsizeReport, SolverError> {
    let mut p = *params;
    p.smoothness = Some(*sm);
    p.mu_x = moduli.mu_x;
    p.mu_y = moduli.mu_y;
    let chk = verify_params(&p)?;
    let algebraic_tol = 1e-12;
    let mut rep = StepsizeReport {
        cond_a: chk.beta_identity,
        cond_b_x: chk.cond_b_x,
        cond_b_y: chk.cond_b_y,
        c_x: chk.c_x,
        c_y: chk.c_y,
        cond_c_max_ratio: None,
        cond_c_worst_k: None,
        cond_c_checked: 0,
        cond_c_skipped: 0,
        algebraic_tol,
        passed: chk.passes(algebraic_tol),
    };
    if let Some(tr) = trace {
        if let Some(first) = tr.steps.first() {
            let floor = COND_C_SCALE_FLOOR * first.scale;
            for s in &tr.steps {
                if !(s.scale > floor) {
                    rep.cond_c_skipped += 1;
                    continue;
                }
                rep.cond_c_checked += 1;
                let ratio = s.surplus / s.scale;
                if rep.cond_c_max_ratio.is_none_or(|m| ratio > m) {
                    rep.cond_c_max_ratio = Some(ratio);
                    rep.cond_c_worst_k = Some(s.k);
                }
            }
            if rep.cond_c_max_ratio.is_some_and(|m| m > COND_C_RTOL) {
                rep.passed = false;
            }
        }
    }
    Ok(rep)
}
