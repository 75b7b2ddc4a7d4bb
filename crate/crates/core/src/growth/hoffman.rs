use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::GrowthError;
use crate::linalg::{self, row_reduce, svd, vstack};
use crate::qp::Polyhedron;
use crate::rng;

pub const KLATTE_MAX_ROWS: usize = 20;
pub const KLATTE_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoffmanMethod {
    SigmaMin,
    KlatteEnumeration,
    SampledLowerBound,
}

#[derive(Debug, Clone, Copy)]
pub struct HoffmanOptions {
    /// `None` picks `SigmaMin` without inequality rows and Klatte otherwise.
    pub method: Option<HoffmanMethod>,
    /// Samples for the cross-check lower bound (0 disables it).
    pub lower_bound_samples: usize,
    pub seed: u64,
}

impl Default for HoffmanOptions {
    fn default() -> Self {
        Self { method: None, lower_bound_samples: 0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoffmanResult {
    pub theta: f64,
    /// Dual pair `(u, v)` with `‖Aᵀu + Cᵀv‖ = 1` and `‖(u, v)‖ = θ`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub method: HoffmanMethod,
    pub lower_bound: Option<f64>,
}

/// Hoffman constant of `{x : Ax = b, Cx <= d}` in the Euclidean norms:
/// the smallest `θ` with `dist(x, P) <= θ ‖(Ax - b, [Cx - d]₊)‖`.
///
/// The value does not depend on `b`, `d` as long as the system is feasible.
pub fn hoffman_constant(a: &DMatrix<f64>, c: &DMatrix<f64>, opts: &HoffmanOptions) -> Result<HoffmanResult, GrowthError> {
    if a.ncols() != c.ncols() && c.nrows() > 0 {
        return Err(GrowthError::Invalid(format!("A has {} columns, C has {}", a.ncols(), c.ncols())));
    }
    let method = opts.method.unwrap_or(if c.nrows() == 0 { HoffmanMethod::SigmaMin } else { HoffmanMethod::KlatteEnumeration });
    let mut res = match method {
        HoffmanMethod::SigmaMin => {
            if c.nrows() > 0 {
                return Err(GrowthError::Invalid("sigma_min applies only without inequality rows".into()));
            }
            sigma_min_route(a)?
        }
        HoffmanMethod::KlatteEnumeration => klatte(a, c)?,
        HoffmanMethod::SampledLowerBound => {
            let lb = hoffman_lower_bound(a, c, opts.lower_bound_samples.max(1), opts.seed)?;
            return Ok(HoffmanResult { theta: lb, witness: None, method, lower_bound: Some(lb) });
        }
    };
    if opts.lower_bound_samples > 0 {
        res.lower_bound = Some(hoffman_lower_bound(a, c, opts.lower_bound_samples, opts.seed)?);
    }
    Ok(res)
}

fn sigma_min_route(a: &DMatrix<f64>) -> Result<HoffmanResult, GrowthError> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(GrowthError::ZeroMatrix);
    }
    let (u, s, _) = svd(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cut = linalg::RANK_RTOL * smax;
    let mut k = None;
    for i in 0..s.len() {
        if s[i] > cut && k.is_none_or(|j: usize| s[i] < s[j]) {
            k = Some(i);
        }
    }
    let k = k.ok_or(GrowthError::ZeroMatrix)?;
    let sig = s[k];
    let uvec: Vec<f64> = u.column(k).iter().map(|v| v / sig).collect();
    Ok(HoffmanResult { theta: 1.0 / sig, witness: Some((uvec, vec![])), method: HoffmanMethod::SigmaMin, lower_bound: None })
}

/// Enumeration over inequality supports `J` with `[A'; C_J]` of full row
/// rank (`A'` a row-reduced equality block). For each pattern, critical
/// points of `‖Mᵀw‖` on the unit sphere are eigenvectors of `M Mᵀ`; those
/// whose `v` part has one strict sign are admissible and give `1/√λ`.
fn klatte(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<HoffmanResult, GrowthError> {
    if c.nrows() > KLATTE_MAX_ROWS {
        return Err(GrowthError::TooManyRows { limit: KLATTE_MAX_ROWS, got: c.nrows() });
    }
    let n = a.ncols().max(c.ncols());
    let a = if a.nrows() == 0 { DMatrix::zeros(0, n) } else { a.clone() };
    let (ar, _) = row_reduce(&a, &DVector::zeros(a.nrows()));
    let r = ar.nrows();
    let mut best: Option<(f64, DVector<f64>, Vec<usize>)> = None;
    let mut visited = 0usize;

    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(j) = stack.pop() {
        visited += 1;
        if visited > KLATTE_BUDGET {
            return Err(GrowthError::Budget(KLATTE_BUDGET));
        }
        let cj = DMatrix::from_fn(j.len(), n, |i, col| c[(j[i], col)]);
        let m = vstack(&[&ar, &cj]);
        if m.nrows() > 0 {
            let q = &m * m.transpose();
            let eig = SymmetricEigen::new(q);
            let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= linalg::RANK_RTOL * lmax.max(f64::MIN_POSITIVE) {
                    continue;
                }
                let mut w = eig.eigenvectors.column(idx).into_owned();
                let vpart = w.rows(r, j.len()).into_owned();
                let thr = 1e-12 * w.norm();
                let admissible = if j.is_empty() {
                    true
                } else if vpart.iter().all(|&v| v > thr) {
                    true
                } else if vpart.iter().all(|&v| v < -thr) {
                    w = -w;
                    true
                } else {
                    false
                };
                if admissible {
                    let val = 1.0 / lam.sqrt();
                    if best.as_ref().is_none_or(|(b, _, _)| val > *b) {
                        best = Some((val, w / lam.sqrt(), j.clone()));
                    }
                }
            }
        }
        // Extend with larger row indices while rows stay independent.
        let start = j.last().map_or(0, |&l| l + 1);
        for i in start..c.nrows() {
            if r + j.len() + 1 > n {
                break;
            }
            let mut next = j.clone();
            next.push(i);
            let cn = DMatrix::from_fn(next.len(), n, |ii, col| c[(next[ii], col)]);
            let mn = vstack(&[&ar, &cn]);
            if linalg::rank(&mn) == mn.nrows() {
                stack.push(next);
            }
        }
    }
    let (theta, w, j) = best.ok_or(GrowthError::ZeroMatrix)?;
    // Witness in the original coordinates: u for the reduced rows is mapped
    // back through the SVD, which keeps ‖Aᵀu‖ and ‖u‖.
    let u_red = w.rows(0, r).into_owned();
    let u = if a.nrows() > 0 && r > 0 {
        let (uu, s, _) = svd(&a);
        let smax = s.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > linalg::RANK_RTOL * smax).collect();
        let mut out = DVector::zeros(a.nrows());
        for (row, &k) in keep.iter().enumerate() {
            out += uu.column(k) * u_red[row];
        }
        out
    } else {
        DVector::zeros(a.nrows())
    };
    let mut v = vec![0.0; c.nrows()];
    for (idx, &i) in j.iter().enumerate() {
        v[i] = w[r + idx];
    }
    Ok(HoffmanResult {
        theta,
        witness: Some((u.iter().cloned().collect(), v)),
        method: HoffmanMethod::KlatteEnumeration,
        lower_bound: None,
    })
}

/// Largest observed ratio `‖x - P(x)‖ / ‖(Ax, [Cx]₊)‖` for the homogeneous
/// system over Gaussian samples.
pub fn hoffman_lower_bound(a: &DMatrix<f64>, c: &DMatrix<f64>, samples: usize, seed: u64) -> Result<f64, GrowthError> {
    let n = a.ncols().max(c.ncols());
    let poly = Polyhedron {
        eq_a: if a.nrows() == 0 { DMatrix::zeros(0, n) } else { a.clone() },
        eq_b: DVector::zeros(a.nrows()),
        ineq_a: if c.nrows() == 0 { DMatrix::zeros(0, n) } else { c.clone() },
        ineq_b: DVector::zeros(c.nrows()),
    };
    let mut best = 0.0f64;
    for s in 0..samples {
        let mut r = rng::stream(seed, s as u64);
        let x = rng::gaussian_vector(&mut r, n, 1.0);
        let px = poly.project(&x).map_err(|e| GrowthError::Invalid(e.to_string()))?.point;
        let eq = if a.nrows() > 0 { (&poly.eq_a * &x).norm_squared() } else { 0.0 };
        let ineq = if c.nrows() > 0 { (&poly.ineq_a * &x).map(|v| v.max(0.0)).norm_squared() } else { 0.0 };
        let res = (eq + ineq).sqrt();
        if res > 1e-12 * x.norm() {
            best = best.max((&x - px).norm() / res);
        }
    }
    Ok(best)
}
