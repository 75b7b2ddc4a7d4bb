use nalgebra::DVector;

use super::generator::{exp_d2phi, exp_dphi};
use super::{Generator, GeometryError, SimpleSet};

#[derive(Debug, Clone, Copy)]
pub struct ProxOptions {
    /// Target accuracy on the returned point.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200_000 }
    }
}

pub fn distance(gen: &Generator, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, GeometryError> {
    gen.bregman(x, y)
}

/// `argmin_{x ∈ set} ⟨linear, x⟩ + inv_step · D(x, anchor)`.
pub fn prox_step(
    gen: &Generator,
    set: &SimpleSet,
    linear: &DVector<f64>,
    inv_step: f64,
    anchor: &DVector<f64>,
    opts: &ProxOptions,
) -> Result<DVector<f64>, GeometryError> {
    if !(inv_step > 0.0 && inv_step.is_finite()) {
        return Err(GeometryError::BadStep(inv_step));
    }
    let n = set.dim();
    for v in [linear, anchor] {
        if v.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: v.len() });
        }
    }
    match gen {
        Generator::Euclidean => set.project_euclidean(&(anchor - linear / inv_step)),
        Generator::DiagQuadratic { weights } => {
            gen.check_point(anchor)?;
            let target = anchor - linear.component_div(weights) / inv_step;
            set.project_weighted(&target, weights)
        }
        Generator::ExpQuadratic { lo, hi } if set.is_separable() => {
            gen.check_point(anchor)?;
            let (slo, shi) = match set {
                SimpleSet::Box { lower, upper } => (lower.clone(), upper.clone()),
                _ => (DVector::from_element(n, f64::NEG_INFINITY), DVector::from_element(n, f64::INFINITY)),
            };
            let mut out = DVector::zeros(n);
            for i in 0..n {
                let a = slo[i].max(*lo);
                let b = shi[i].min(*hi);
                if a > b {
                    return Err(GeometryError::InvalidSet(format!(
                        "coordinate {i} of the set misses the generator domain"
                    )));
                }
                let target = exp_dphi(anchor[i]) - linear[i] / inv_step;
                out[i] = solve_monotone(target, a, b);
            }
            Ok(out)
        }
        _ => prox_generic(gen, set, linear, inv_step, anchor, opts),
    }
}

/// Root of `φ'(x) = target` on `[a, b]`, clamped when the root lies outside.
/// Safeguarded Newton: bisection whenever the Newton step leaves the bracket.
fn solve_monotone(target: f64, a: f64, b: f64) -> f64 {
    if a.is_finite() && exp_dphi(a) >= target {
        return a;
    }
    if b.is_finite() && exp_dphi(b) <= target {
        return b;
    }
    // Bracket the root when a bound is infinite.
    let (mut lo, mut hi) = (a, b);
    if !lo.is_finite() {
        lo = (-1.0f64).min(hi - 1.0);
        while exp_dphi(lo) > target {
            lo *= 2.0;
        }
    }
    if !hi.is_finite() {
        hi = 1.0f64.max(lo + 1.0);
        while exp_dphi(hi) < target {
            hi *= 2.0;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = exp_dphi(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let nx = x - fx / exp_d2phi(x);
        let next = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Accelerated projected gradient on the strongly convex prox objective,
/// over the set intersected with the generator domain.
fn prox_generic(
    gen: &Generator,
    set: &SimpleSet,
    linear: &DVector<f64>,
    t: f64,
    anchor: &DVector<f64>,
    opts: &ProxOptions,
) -> Result<DVector<f64>, GeometryError> {
    let n = set.dim();
    let mut poly = set.as_polyhedron();
    if let Some((lo, hi)) = gen.domain() {
        let dom = SimpleSet::Box { lower: DVector::from_element(n, lo), upper: DVector::from_element(n, hi) };
        poly = poly.intersect(&dom.as_polyhedron());
    }
    let proj = |p: &DVector<f64>| -> Result<DVector<f64>, GeometryError> {
        if poly.ineq_a.nrows() == 0 && poly.eq_a.nrows() == 0 {
            Ok(p.clone())
        } else {
            Ok(poly.project(p)?.point)
        }
    };
    let g_anchor = gen.grad(anchor)?;
    let grad = |x: &DVector<f64>| -> Result<DVector<f64>, GeometryError> { Ok(linear + (gen.grad(x)? - &g_anchor) * t) };
    let mu = t;
    let known_l = gen.lipschitz();
    let mut l = if known_l.is_finite() { t * known_l } else { t };
    let mut x = proj(anchor)?;
    let mut x_prev = x.clone();
    let obj = |x: &DVector<f64>| -> Result<f64, GeometryError> { Ok(linear.dot(x) + t * gen.bregman(x, anchor)?) };

    for it in 0..opts.max_iter {
        let (y, use_momentum) = if known_l.is_finite() {
            let q = mu / l;
            let beta = (1.0 - q.sqrt()) / (1.0 + q.sqrt());
            (&x + (&x - &x_prev) * beta, true)
        } else {
            (x.clone(), false)
        };
        let gy = grad(&y)?;
        let mut next = proj(&(&y - &gy / l))?;
        if !use_momentum {
            // Backtracking on the quadratic upper model.
            let fy = obj(&y)?;
            loop {
                let d = &next - &y;
                if obj(&next)? <= fy + gy.dot(&d) + 0.5 * l * d.norm_squared() * (1.0 + 1e-12) + 1e-15 {
                    break;
                }
                l *= 2.0;
                next = proj(&(&y - &gy / l))?;
            }
        }
        // Error bound from the gradient mapping of a μ-strongly convex objective.
        let gn = grad(&next)?;
        let t_next = proj(&(&next - &gn / l))?;
        let step = (&t_next - &next).norm();
        let floor = 8.0 * f64::EPSILON * (1.0 + next.amax());
        let need = (opts.tol * (1.0 + next.amax()) / (1.0 + l / mu)).max(floor);
        x_prev = x;
        x = next;
        if step <= need {
            return Ok(t_next);
        }
        if it > 0 && it % 1000 == 0 && !known_l.is_finite() {
            l = (l * 0.5).max(t);
        }
    }
    Err(GeometryError::NotConverged(opts.max_iter))
}

/// Bregman projection `argmin_{x ∈ set} D(x, p)`.
pub fn project(gen: &Generator, set: &SimpleSet, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    prox_step(gen, set, &DVector::zeros(p.len()), 1.0, p, &ProxOptions::default())
}

/// Largest observed ratio `‖P(u) - P(v)‖ / ‖u - v‖` over the given pairs.
pub fn check_nonexpansive(
    gen: &Generator,
    set: &SimpleSet,
    pairs: &[(DVector<f64>, DVector<f64>)],
) -> Result<f64, GeometryError> {
    if pairs.is_empty() {
        return Err(GeometryError::Degenerate("no pairs given".into()));
    }
    let mut worst = 0.0f64;
    for (i, (u, v)) in pairs.iter().enumerate() {
        let d = (u - v).norm();
        if d == 0.0 {
            return Err(GeometryError::Degenerate(format!("pair {i} has identical points")));
        }
        let pu = project(gen, set, u)?;
        let pv = project(gen, set, v)?;
        worst = worst.max((pu - pv).norm() / d);
    }
    Ok(worst)
}
