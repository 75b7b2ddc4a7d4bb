//! Sampled checks of the standing assumptions on a [`SaddleProblem`].

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{SaddleProblem, SimpleSet};
use crate::rng;

/// A feasible point: uniform on bounded boxes, otherwise Gaussian around
/// `center` with spread `radius`, then projected.
pub fn sample_in<R: Rng>(set: &SimpleSet, rng: &mut R, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    if let Some((lo, hi)) = set.bounds() {
        let u = rng::uniform_vector(rng, &lo, &hi);
        return set.project_euclidean(&u).unwrap_or(u);
    }
    let g = DVector::from_fn(set.dim(), |i, _| {
        let v: f64 = rng.sample(StandardNormal);
        center[i] + radius * v
    });
    set.project_euclidean(&g).unwrap_or(g)
}

fn sample_z<R: Rng>(p: &dyn SaddleProblem, rng: &mut R, radius: f64) -> (DVector<f64>, DVector<f64>) {
    let x = sample_in(p.set_x(), rng, &DVector::zeros(p.dim_x()), radius);
    let y = sample_in(p.set_y(), rng, &DVector::zeros(p.dim_y()), radius);
    (x, y)
}

/// Largest relative error between the gradients and central differences of
/// `eval_f`, over `samples` random feasible points.
pub fn gradient_error(p: &dyn SaddleProblem, samples: usize, seed: u64, radius: f64) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..samples {
        let mut r = rng::stream(seed, s as u64);
        let (x, y) = sample_z(p, &mut r, radius);
        let gx = p.grad_x(&x, &y);
        let gy = p.grad_y(&x, &y);
        let scale = 1.0 + gx.amax().max(gy.amax());
        for i in 0..x.len() {
            let h = 1e-6 * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.eval_f(&xp, &y) - p.eval_f(&xm, &y)) / (2.0 * h);
            worst = worst.max((fd - gx[i]).abs() / scale);
        }
        for i in 0..y.len() {
            let h = 1e-6 * (1.0 + y[i].abs());
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[i] += h;
            ym[i] -= h;
            let fd = (p.eval_f(&x, &yp) - p.eval_f(&x, &ym)) / (2.0 * h);
            worst = worst.max((fd - gy[i]).abs() / scale);
        }
    }
    worst
}

/// Largest excess of `‖∇x f(z) - ∇x f(z')‖` over `L_xx‖Δx‖ + L_xy‖Δy‖`
/// (and the mirrored y inequality), relative to the right-hand side.
pub fn lipschitz_excess(p: &dyn SaddleProblem, pairs: usize, seed: u64, radius: f64) -> f64 {
    let sm = p.smoothness();
    let mut worst = f64::NEG_INFINITY;
    for s in 0..pairs {
        let mut r = rng::stream(seed, s as u64);
        let (x1, y1) = sample_z(p, &mut r, radius);
        let (x2, y2) = sample_z(p, &mut r, radius);
        let dx = (&x1 - &x2).norm();
        let dy = (&y1 - &y2).norm();
        let lx = (p.grad_x(&x1, &y1) - p.grad_x(&x2, &y2)).norm();
        let ly = (p.grad_y(&x1, &y1) - p.grad_y(&x2, &y2)).norm();
        let rx = sm.l_xx * dx + sm.l_xy * dy;
        let ry = sm.l_yx * dx + sm.l_yy * dy;
        worst = worst.max((lx - rx) / (1.0 + rx)).max((ly - ry) / (1.0 + ry));
    }
    worst
}

/// Largest midpoint-convexity violation in x and concavity violation in y.
pub fn convexity_violation(p: &dyn SaddleProblem, segments: usize, seed: u64, radius: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for s in 0..segments {
        let mut r = rng::stream(seed, s as u64);
        let (x1, y) = sample_z(p, &mut r, radius);
        let (x2, y2) = sample_z(p, &mut r, radius);
        let xm = (&x1 + &x2) * 0.5;
        let ym = (&y + &y2) * 0.5;
        let conv = p.eval_f(&xm, &y) - 0.5 * (p.eval_f(&x1, &y) + p.eval_f(&x2, &y));
        let conc = 0.5 * (p.eval_f(&x1, &y) + p.eval_f(&x1, &y2)) - p.eval_f(&x1, &ym);
        let scale = 1.0 + p.eval_f(&x1, &y).abs();
        worst = worst.max(conv / scale).max(conc / scale);
    }
    worst
}
