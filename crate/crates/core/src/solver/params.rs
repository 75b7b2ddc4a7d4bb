use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::growth::{GrowthModuli, VarsigmaRule};
use crate::problems::SmoothnessConstants;

/// Lower clamp on α when the root falls at or below zero.
const ALPHA_FLOOR: f64 = 1e-6;
/// Relative tolerance of the post-derivation verification.
const VERIFY_RTOL: f64 = 1e-10;

/// Constant GAPD schedule with `t_k = α^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapdParams {
    pub theta: f64,
    pub alpha: f64,
    /// `1 - α`, kept separately because α is often within 1e-6 of one.
    pub one_minus_alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub varsigma: f64,
    pub varsigma_rule: Option<VarsigmaRule>,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub l_psi_x: f64,
    pub l_psi_y: f64,
    pub smoothness: Option<SmoothnessConstants>,
}

impl GapdParams {
    /// Hand-set steps without a schedule behind them. Monitors that need
    /// Γ or the moduli are unavailable for these.
    pub fn manual(theta: f64, alpha: f64, beta: f64, tau: f64, sigma: f64) -> Result<Self, SolverError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(SolverError::InvalidParams(format!("theta must lie in [0, 1], got {theta}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) || !(beta >= 0.0) || !(tau > 0.0) || !(sigma > 0.0) {
            return Err(SolverError::InvalidParams("need alpha in (0, 1], beta >= 0, tau > 0, sigma > 0".into()));
        }
        Ok(Self {
            theta,
            alpha,
            one_minus_alpha: 1.0 - alpha,
            beta,
            tau,
            sigma,
            varsigma: 0.0,
            varsigma_rule: None,
            gamma_x: 0.0,
            gamma_y: 0.0,
            mu_x: 0.0,
            mu_y: 0.0,
            l_psi_x: 1.0,
            l_psi_y: 1.0,
            smoothness: None,
        })
    }

    /// `t_0 / t_K = α^K`, evaluated without forming `α^{-K}`.
    pub fn rate_power(&self, k: usize) -> f64 {
        rate_power(self.one_minus_alpha, k)
    }

    /// Diagonal blocks of `A - ΓB`.
    pub fn lyapunov_weights(&self) -> (f64, f64) {
        (1.0 / self.tau - self.gamma_x * self.beta, 1.0 / self.sigma - self.gamma_y * self.alpha)
    }

    pub fn has_schedule(&self) -> bool {
        self.smoothness.is_some() && self.gamma_x > 0.0 && self.gamma_y > 0.0
    }
}

pub(crate) fn rate_power(one_minus_alpha: f64, k: usize) -> f64 {
    (k as f64 * (-one_minus_alpha).ln_1p()).exp()
}

/// Smallest `u = 1 - α` with `𝔄 (1-u)² + 𝔅 (1-u) - ℭ >= 0`, where
/// `𝔅 = -𝔄 + ℭ + r`. Written as `2r / (S + √(S² - 4𝔄r))`, `S = 𝔄 + ℭ + r`,
/// which keeps full relative accuracy when `u` is tiny.
fn one_minus_root(a: f64, c: f64, r: f64) -> f64 {
    let s = a + c + r;
    let disc = (s * s - 4.0 * a * r).max(0.0);
    2.0 * r / (s + disc.sqrt())
}

/// `2L²/γ`, read as zero when the Lipschitz constant vanishes with γ.
fn ratio(l_sq: f64, gamma: f64) -> f64 {
    if l_sq == 0.0 {
        0.0
    } else {
        2.0 * l_sq / gamma
    }
}

/// Constant schedule for GAPD from smoothness, growth moduli and θ.
///
/// Γ is fixed to `γx = √(2Lxy² + 2Lxx²)`, `γy = √(2Lyx² + 2Lyy²)`. The dual
/// side solves the quadratic in α with the single constant
/// `L_ψ = max(L_ψx, L_ψy)`; the primal side solves the quadratic obtained
/// from `C_x <= 0` after substituting `β = α(1-θ)` and the τ formula.
pub fn derive_params(
    sm: &SmoothnessConstants,
    moduli: &GrowthModuli,
    theta: f64,
    l_psi_x: f64,
    l_psi_y: f64,
) -> Result<GapdParams, SolverError> {
    sm.validate().map_err(SolverError::InvalidParams)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(SolverError::InvalidParams(format!("theta must lie in [0, 1], got {theta}")));
    }
    for (name, l) in [("L_psi_x", l_psi_x), ("L_psi_y", l_psi_y)] {
        if !(l.is_finite() && l >= 1.0) {
            return Err(SolverError::InvalidParams(format!("{name} must be finite and >= 1, got {l}")));
        }
    }
    let (mu_x, mu_y) = (moduli.mu_x, moduli.mu_y);
    if !(mu_x > 0.0 && mu_y > 0.0 && mu_x.is_finite() && mu_y.is_finite()) {
        return Err(SolverError::InvalidParams(format!("moduli must be positive, got ({mu_x}, {mu_y})")));
    }
    let (varsigma, rule) = moduli.varsigma(theta);
    if !(varsigma > 0.0) {
        return Err(SolverError::NoContractiveSchedule { alpha: 1.0 });
    }

    let SmoothnessConstants { l_xx, l_xy, l_yx, l_yy } = *sm;
    let gamma_x = (2.0 * l_xy * l_xy + 2.0 * l_xx * l_xx).sqrt();
    let gamma_y = (2.0 * l_yx * l_yx + 2.0 * l_yy * l_yy).sqrt();
    let w = 1.0 - theta;

    let l_psi = l_psi_x.max(l_psi_y);
    let a_y = w * ratio(l_xy * l_xy, gamma_x) + ratio(l_yy * l_yy, gamma_y) + gamma_y;
    let c_y = l_psi * l_psi * a_y;
    let u_y = one_minus_root(a_y, c_y, varsigma * mu_y / 2.0);

    let (px2, py2) = (l_psi_x * l_psi_x, l_psi_y * l_psi_y);
    let a_x = w * ratio(l_xx * l_xx, gamma_x) + ratio(l_yx * l_yx, gamma_y) + w * gamma_x;
    let c_x = w * w * px2 * ratio(l_xx * l_xx, gamma_x) + py2 * ratio(l_yx * l_yx, gamma_y) + w * w * px2 * gamma_x + theta * l_xx;
    let u_x = one_minus_root(a_x, c_x, varsigma * mu_x / 2.0);

    // α = max(α_x, α_y).
    let mut u = u_x.min(u_y);
    if !(u.is_finite() && u > 0.0) {
        return Err(SolverError::NoContractiveSchedule { alpha: 1.0 - u });
    }
    if u >= 1.0 - ALPHA_FLOOR {
        u = 1.0 - ALPHA_FLOOR;
    }
    let alpha = 1.0 - u;
    if alpha >= 1.0 {
        return Err(SolverError::NoContractiveSchedule { alpha });
    }
    let tau = 2.0 * u / (varsigma * alpha * mu_x);
    let sigma = 2.0 * u / (varsigma * alpha * mu_y);
    let params = GapdParams {
        theta,
        alpha,
        one_minus_alpha: u,
        beta: alpha * w,
        tau,
        sigma,
        varsigma,
        varsigma_rule: Some(rule),
        gamma_x,
        gamma_y,
        mu_x,
        mu_y,
        l_psi_x,
        l_psi_y,
        smoothness: Some(*sm),
    };
    let check = verify_params(&params)?;
    if !check.passes(VERIFY_RTOL) {
        let (which, value) = check.worst();
        return Err(SolverError::DerivationCheck { which, value });
    }
    Ok(params)
}

/// Relative residuals of the algebraic step-size conditions. Each entry is
/// `<= tol` when the condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamCheck {
    /// `|β - α(1-θ)| / (1 + β)`.
    pub beta_identity: f64,
    /// `(1/τ - α(1/τ + ςμx/2)) · τ`.
    pub cond_b_x: f64,
    pub cond_b_y: f64,
    /// `C_x` divided by the sum of magnitudes of its terms.
    pub c_x: f64,
    pub c_y: f64,
    /// `A - ΓB` blocks.
    pub weight_x: f64,
    pub weight_y: f64,
}

impl ParamCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.beta_identity <= tol
            && self.cond_b_x <= tol
            && self.cond_b_y <= tol
            && self.c_x <= tol
            && self.c_y <= tol
            && self.weight_x > 0.0
            && self.weight_y > 0.0
    }

    pub fn worst(&self) -> (&'static str, f64) {
        let mut out = ("beta_identity", self.beta_identity);
        for (name, v) in [("cond_b_x", self.cond_b_x), ("cond_b_y", self.cond_b_y), ("C_x", self.c_x), ("C_y", self.c_y)] {
            if v > out.1 {
                out = (name, v);
            }
        }
        if !(self.weight_x > 0.0) {
            out = ("A-GB_x", self.weight_x);
        } else if !(self.weight_y > 0.0) {
            out = ("A-GB_y", self.weight_y);
        }
        out
    }
}

/// Substitute a derived schedule back into the conditions, using the exact
/// `L_ψx`, `L_ψy` and `(1-θ)²` weights.
pub fn verify_params(p: &GapdParams) -> Result<ParamCheck, SolverError> {
    let sm = p.smoothness.ok_or_else(|| SolverError::InvalidParams("parameters carry no smoothness constants".into()))?;
    if !(p.gamma_x >= 0.0 && p.gamma_y > 0.0) {
        return Err(SolverError::InvalidParams("Γ weights are not set".into()));
    }
    let SmoothnessConstants { l_xx, l_xy, l_yx, l_yy } = sm;
    let (alpha, beta, theta) = (p.alpha, p.beta, p.theta);
    let w = 1.0 - theta;
    let (inv_tau, inv_sigma) = (1.0 / p.tau, 1.0 / p.sigma);

    let beta_identity = (beta - alpha * w).abs() / (1.0 + beta);
    let cond_b = |inv: f64, mu: f64| (inv - alpha * (inv + p.varsigma * mu / 2.0)) / inv;

    let inv_g = |g: f64, l_sq: f64| if l_sq == 0.0 { 0.0 } else { l_sq / g };
    let kx = w * w * p.l_psi_x * p.l_psi_x + beta;
    let ky = p.l_psi_y * p.l_psi_y + alpha;
    let cx_terms = [
        kx * inv_g(p.gamma_x, l_xx * l_xx),
        ky * inv_g(p.gamma_y, l_yx * l_yx),
        p.gamma_x / 2.0 * kx,
        -0.5 * (inv_tau - theta * l_xx),
    ];
    let cy_terms = [
        kx * inv_g(p.gamma_x, l_xy * l_xy),
        ky * inv_g(p.gamma_y, l_yy * l_yy),
        p.gamma_y / 2.0 * ky,
        -0.5 * inv_sigma,
    ];
    let rel = |t: &[f64; 4]| {
        let s: f64 = t.iter().sum();
        let scale: f64 = t.iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            0.0
        } else {
            s / scale
        }
    };
    let (weight_x, weight_y) = p.lyapunov_weights();
    Ok(ParamCheck {
        beta_identity,
        cond_b_x: cond_b(inv_tau, p.mu_x),
        cond_b_y: cond_b(inv_sigma, p.mu_y),
        c_x: rel(&cx_terms),
        c_y: rel(&cy_terms),
        weight_x,
        weight_y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdaStepRule {
    /// Forward-method step `min(μx, μy) / L_F²` for the field's Lipschitz
    /// bound `L_F² = max(2Lxx² + 2Lyx², 2Lxy² + 2Lyy²)`.
    Theory,
    /// `1 / (2L)` with `L = max(Lxx, Lyy) + max(Lxy, Lyx)`.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdaSteps {
    pub step_x: f64,
    pub step_y: f64,
    pub rule: Option<GdaStepRule>,
}

impl GdaSteps {
    pub fn manual(step_x: f64, step_y: f64) -> Result<Self, SolverError> {
        if !(step_x > 0.0 && step_y > 0.0 && step_x.is_finite() && step_y.is_finite()) {
            return Err(SolverError::InvalidParams(format!("GDA steps must be positive, got ({step_x}, {step_y})")));
        }
        Ok(Self { step_x, step_y, rule: None })
    }
}

pub fn gda_steps(sm: &SmoothnessConstants, moduli: &GrowthModuli, rule: GdaStepRule) -> Result<GdaSteps, SolverError> {
    sm.validate().map_err(SolverError::InvalidParams)?;
    let eta = match rule {
        GdaStepRule::Theory => {
            let lf_sq = (2.0 * sm.l_xx.powi(2) + 2.0 * sm.l_yx.powi(2)).max(2.0 * sm.l_xy.powi(2) + 2.0 * sm.l_yy.powi(2));
            moduli.mu_x.min(moduli.mu_y) / lf_sq
        }
        GdaStepRule::Heuristic => 0.5 / (sm.l_xx.max(sm.l_yy) + sm.l_xy.max(sm.l_yx)),
    };
    let mut s = GdaSteps::manual(eta, eta)?;
    s.rule = Some(rule);
    Ok(s)
}
