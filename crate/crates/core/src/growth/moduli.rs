use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{GrowthCondition, GrowthError, GrowthModuli, HoffmanResult};
use crate::linalg::{nullspace, pinv, spectral_norm, top_right_singular};
use crate::problems::StructuredProblem;

/// Relative tolerance for the kernel-inclusion checks.
pub const KERNEL_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    /// Verify the kernel inclusions first and fail with the violating
    /// direction.
    Strict,
    /// Return the pseudoinverse values regardless, marked uncertified.
    Unchecked,
}

/// Dominance factors `ξ₁C₁ᵀC₁ ⪰ AᵀA`, `ξ₂C₁ᵀC₁ ⪰ ‖λ*‖²GᵀG`,
/// `ξ₃C₂ᵀC₂ ⪰ AAᵀ`, `ξ₄C₂ᵀC₂ ⪰ ‖ν*‖²FᵀF`. Without constraints only
/// `ν₁ = ξ₁` and `ν₂ = ξ₃` are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiConstants {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub constrained: bool,
    pub certified: bool,
}

impl XiConstants {
    pub fn nu1(&self) -> f64 {
        self.xi1
    }
    pub fn nu2(&self) -> f64 {
        self.xi3
    }

    /// Smallest eigenvalues of the four dominance gaps, each divided by
    /// `1 + ‖right-hand side‖`.
    pub fn dominance_residuals(&self, p: &StructuredProblem, multipliers: Option<(&DVector<f64>, &DVector<f64>)>) -> [f64; 4] {
        let (g, f) = constraint_rows(p);
        let c1tc1 = p.c1().tr_mul(p.c1());
        let c2tc2 = p.c2().tr_mul(p.c2());
        let a = p.a();
        let (ln2, nn2) = multipliers.map_or((0.0, 0.0), |(l, n)| (l.norm_squared(), n.norm_squared()));
        let gap = |lhs: DMatrix<f64>, rhs: DMatrix<f64>| -> f64 {
            if lhs.nrows() == 0 {
                return 0.0;
            }
            let scale = 1.0 + rhs.norm();
            let e = SymmetricEigen::new(lhs - rhs);
            e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min) / scale
        };
        [
            gap(&c1tc1 * self.xi1, a.tr_mul(a)),
            gap(&c1tc1 * self.xi2, g.tr_mul(&g) * ln2),
            gap(&c2tc2 * self.xi3, a * a.transpose()),
            gap(&c2tc2 * self.xi4, f.tr_mul(&f) * nn2),
        ]
    }
}

fn constraint_rows(p: &StructuredProblem) -> (DMatrix<f64>, DMatrix<f64>) {
    (p.quad.set_x.as_polyhedron().ineq_a, p.quad.set_y.as_polyhedron().ineq_a)
}

/// Check `ker C ⊆ ker M` for a map `M` acting on the same space as `C`.
fn kernel_inclusion(c: &DMatrix<f64>, m: &DMatrix<f64>, which: &'static str) -> Result<(), GrowthError> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let basis = nullspace(c);
    if basis.ncols() == 0 {
        return Ok(());
    }
    let mn = spectral_norm(m, 1e-12, 100_000);
    if mn == 0.0 {
        return Ok(());
    }
    let img = m * &basis;
    let (s, v) = top_right_singular(&img);
    let residual = s / mn;
    if residual > KERNEL_RTOL {
        let dir = &basis * v;
        return Err(GrowthError::KernelInclusion { which, residual, direction: dir.iter().cloned().collect() });
    }
    Ok(())
}

/// Pseudoinverse choice `ξ₁ = ‖A C₁⁺‖²` and analogues.
pub fn xi_constants(
    p: &StructuredProblem,
    multipliers: Option<(&DVector<f64>, &DVector<f64>)>,
    mode: XiMode,
) -> Result<XiConstants, GrowthError> {
    let (g, f) = constraint_rows(p);
    let (lambda_sq, nu_sq) = multipliers.map_or((0.0, 0.0), |(l, n)| (l.norm_squared(), n.norm_squared()));
    let constrained = g.nrows() > 0 || f.nrows() > 0;
    let use_g = g.nrows() > 0 && lambda_sq > 0.0;
    let use_f = f.nrows() > 0 && nu_sq > 0.0;
    if mode == XiMode::Strict {
        kernel_inclusion(p.c1(), p.a(), "ker C1 in ker A")?;
        if use_g {
            kernel_inclusion(p.c1(), &g, "ker C1 in ker G")?;
        }
        kernel_inclusion(p.c2(), &p.a().transpose(), "ker C2 in ker A^T")?;
        if use_f {
            kernel_inclusion(p.c2(), &f, "ker C2 in ker F")?;
        }
    }
    let c1p = pinv(p.c1());
    let c2p = pinv(p.c2());
    let sq = |m: DMatrix<f64>| {
        let s = spectral_norm(&m, 1e-12, 100_000);
        s * s
    };
    let xi1 = sq(p.a() * &c1p);
    let xi3 = sq(p.a().transpose() * &c2p);
    let xi2 = if use_g { lambda_sq * sq(&g * &c1p) } else { 0.0 };
    let xi4 = if use_f { nu_sq * sq(&f * &c2p) } else { 0.0 };
    Ok(XiConstants { xi1, xi2, xi3, xi4, constrained, certified: mode == XiMode::Strict })
}

/// `μ = min{κx, κy} / (θ² max{1 + ξ₁ + ξ₂, 1 + ξ₃ + ξ₄})` for both blocks.
pub fn structured_moduli(p: &StructuredProblem, hoffman: &HoffmanResult, xi: &XiConstants) -> Result<GrowthModuli, GrowthError> {
    let kappa = p.kappa_x.min(p.kappa_y);
    let denom = hoffman.theta.powi(2) * (1.0 + xi.xi1 + xi.xi2).max(1.0 + xi.xi3 + xi.xi4);
    let mu = kappa / denom;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(GrowthError::NonPositive(mu));
    }
    let mut m = GrowthModuli::new(mu, mu, GrowthCondition::Both)?;
    m.certified = xi.certified;
    Ok(m)
}

/// Everything that went into a modulus computed from a solution set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliDerivation {
    pub moduli: GrowthModuli,
    pub xi: XiConstants,
    pub hoffman: HoffmanResult,
    /// Why the strict kernel checks were skipped, when they were.
    pub fallback: Option<String>,
}

/// Hoffman constant of the solution-set description, ξ constants and the
/// resulting modulus. With `allow_unchecked`, a failed kernel inclusion
/// falls back to the unchecked ξ values and an uncertified modulus.
pub fn derive_moduli(
    p: &StructuredProblem,
    zstar: &crate::problems::SolutionSet,
    hoffman_opts: &super::HoffmanOptions,
    allow_unchecked: bool,
) -> Result<ModuliDerivation, GrowthError> {
    let desc = zstar.description.as_ref().ok_or(GrowthError::NoDescription)?;
    let hoffman = super::hoffman_constant(&desc.eq_a, &desc.ineq_a, hoffman_opts)?;
    let mult = zstar.multipliers.as_ref().map(|(l, n)| (l, n));
    let (xi, fallback) = match xi_constants(p, mult, XiMode::Strict) {
        Ok(xi) => (xi, None),
        Err(e @ GrowthError::KernelInclusion { .. }) if allow_unchecked => {
            (xi_constants(p, mult, XiMode::Unchecked)?, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let moduli = structured_moduli(p, &hoffman, &xi)?;
    Ok(ModuliDerivation { moduli, xi, hoffman, fallback })
}
