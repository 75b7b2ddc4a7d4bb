use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GrowthError, GrowthModuli};
use crate::geometry::{Generator, SimpleSet};
use crate::problems::{field_operator, split, stack, SaddleProblem, SolutionKind, SolutionSet};
use crate::rng;

#[derive(Debug, Clone)]
pub struct CertOptions {
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the sampling box around Z* along unbounded directions.
    pub radius: f64,
    /// Extra points `z = (x, y)` evaluated after the random ones.
    pub forced: Vec<DVector<f64>>,
    /// Margins below `-tol · (1 + |lhs| + |rhs|)` count as violations.
    pub tol: f64,
    pub gen_x: Generator,
    pub gen_y: Generator,
}

impl Default for CertOptions {
    fn default() -> Self {
        Self {
            samples: 500,
            seed: 0,
            radius: 1.0,
            forced: Vec::new(),
            tol: 1e-8,
            gen_x: Generator::Euclidean,
            gen_y: Generator::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub condition: String,
    pub mu_x: f64,
    pub mu_y: f64,
    pub samples: usize,
    /// Smallest raw margin `lhs - rhs`.
    pub min_margin: f64,
    /// Smallest margin divided by `1 + |lhs| + |rhs|`.
    pub min_scaled_margin: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
    pub tol: f64,
}

impl CertReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn box_around<R: Rng>(rng: &mut R, set: &SimpleSet, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    match set.bounds() {
        Some((lo, hi)) => rng::uniform_vector(rng, &lo, &hi),
        None => DVector::from_fn(center.len(), |i, _| {
            let u: f64 = rng.random();
            center[i] + radius * (2.0 * u - 1.0)
        }),
    }
}

fn random_member<R: Rng>(rng: &mut R, zstar: &SolutionSet, radius: f64) -> DVector<f64> {
    match &zstar.kind {
        SolutionKind::SinglePoint(z) => z.clone(),
        SolutionKind::Affine { point, basis, .. } => {
            let c = DVector::from_fn(basis.ncols(), |_, _| {
                let g: f64 = rng.sample(StandardNormal);
                g * radius
            });
            let z = point + basis * c;
            zstar.project(&z).unwrap_or(z)
        }
        SolutionKind::Sampled(v) => v[rng.random_range(0..v.len())].clone(),
    }
}

/// The `i`-th sample, drawn from its own stream so the sample set does not
/// depend on scheduling.
fn sample(p: &dyn SaddleProblem, zstar: &SolutionSet, opts: &CertOptions, i: usize) -> DVector<f64> {
    let mut r = rng::stream(opts.seed, i as u64);
    let center = random_member(&mut r, zstar, opts.radius);
    let (cx, cy) = split(p, &center).expect("solution set matches problem dims");
    let (sx, sy) = (p.set_x(), p.set_y());
    let (x, y) = match i % 4 {
        // Near Z*.
        1 => {
            let eps: f64 = 1e-2 * opts.radius * r.random::<f64>();
            let jitter = |c: &DVector<f64>, r: &mut rand_chacha::ChaCha20Rng| {
                DVector::from_fn(c.len(), |k, _| {
                    let g: f64 = r.sample(StandardNormal);
                    c[k] + eps * g
                })
            };
            (jitter(&cx, &mut r), jitter(&cy, &mut r))
        }
        // Towards set boundaries.
        2 => {
            let snap = |set: &SimpleSet, c: &DVector<f64>, r: &mut rand_chacha::ChaCha20Rng| {
                let mut v = box_around(r, set, c, opts.radius);
                if let SimpleSet::Box { lower, upper } = set {
                    for k in 0..v.len() {
                        let u: f64 = r.random();
                        if u < 0.15 && lower[k].is_finite() {
                            v[k] = lower[k];
                        } else if u < 0.3 && upper[k].is_finite() {
                            v[k] = upper[k];
                        }
                    }
                    v
                } else {
                    // Push outward; the projection lands on the boundary.
                    c + (v - c) * 3.0
                }
            };
            (snap(sx, &cx, &mut r), snap(sy, &cy, &mut r))
        }
        _ => (box_around(&mut r, sx, &cx, opts.radius), box_around(&mut r, sy, &cy, opts.radius)),
    };
    let x = sx.project_euclidean(&x).unwrap_or(x);
    let y = sy.project_euclidean(&y).unwrap_or(y);
    stack(&x, &y)
}

#[derive(Clone, Copy)]
enum Kind {
    Qgg,
    Qfg,
}

fn margin(
    p: &dyn SaddleProblem,
    zstar: &SolutionSet,
    moduli: &GrowthModuli,
    opts: &CertOptions,
    kind: Kind,
    z: &DVector<f64>,
) -> Result<(f64, f64), GrowthError> {
    let zb = zstar.project(z)?;
    let (x, y) = split(p, z)?;
    let (xb, yb) = split(p, &zb)?;
    let d = moduli.mu_x * opts.gen_x.bregman(&x, &xb).map_err(crate::problems::ProblemError::from)?
        + moduli.mu_y * opts.gen_y.bregman(&y, &yb).map_err(crate::problems::ProblemError::from)?;
    let (lhs, rhs) = match kind {
        Kind::Qgg => {
            let dz = z - &zb;
            ((field_operator(p, z)? - field_operator(p, &zb)?).dot(&dz), 2.0 * d)
        }
        Kind::Qfg => (p.eval_f(&x, &yb) - p.eval_f(&xb, &y), d),
    };
    Ok((lhs - rhs, 1.0 + lhs.abs() + rhs.abs()))
}

fn certify(
    p: &dyn SaddleProblem,
    zstar: &SolutionSet,
    moduli: &GrowthModuli,
    opts: &CertOptions,
    kind: Kind,
) -> Result<CertReport, GrowthError> {
    if opts.samples == 0 && opts.forced.is_empty() {
        return Err(GrowthError::Invalid("need at least one sample".into()));
    }
    let total = opts.samples + opts.forced.len();
    let results: Vec<Result<(f64, f64, DVector<f64>), GrowthError>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let z = if i < opts.samples { sample(p, zstar, opts, i) } else { opts.forced[i - opts.samples].clone() };
            let (m, scale) = margin(p, zstar, moduli, opts, kind, &z)?;
            Ok((m, scale, z))
        })
        .collect();
    let mut min_margin = f64::INFINITY;
    let mut min_scaled = f64::INFINITY;
    let mut worst = Vec::new();
    for r in results {
        let (m, scale, z) = r?;
        if m / scale < min_scaled {
            min_scaled = m / scale;
            worst = z.iter().cloned().collect();
        }
        min_margin = min_margin.min(m);
    }
    Ok(CertReport {
        condition: match kind {
            Kind::Qgg => "two_sided_qgg".into(),
            Kind::Qfg => "two_sided_qfg".into(),
        },
        mu_x: moduli.mu_x,
        mu_y: moduli.mu_y,
        samples: total,
        min_margin,
        min_scaled_margin: min_scaled,
        worst_point: worst,
        passed: min_scaled >= -opts.tol,
        tol: opts.tol,
    })
}

/// Sampled check of `⟨F(z) - F(z̄), z - z̄⟩ >= 2(μx Dx(x, x̄) + μy Dy(y, ȳ))`.
pub fn certify_qgg(p: &dyn SaddleProblem, zstar: &SolutionSet, moduli: &GrowthModuli, opts: &CertOptions) -> Result<CertReport, GrowthError> {
    certify(p, zstar, moduli, opts, Kind::Qgg)
}

/// Sampled check of `f(x, ȳ) - f(x̄, y) >= μx Dx(x, x̄) + μy Dy(y, ȳ)`.
pub fn certify_qfg(p: &dyn SaddleProblem, zstar: &SolutionSet, moduli: &GrowthModuli, opts: &CertOptions) -> Result<CertReport, GrowthError> {
    certify(p, zstar, moduli, opts, Kind::Qfg)
}

/// QFG at `(μx / L_ψx, μy / L_ψy)` given QGG moduli, on the same samples.
pub fn qgg_implies_qfg_check(
    p: &dyn SaddleProblem,
    zstar: &SolutionSet,
    qgg: &GrowthModuli,
    opts: &CertOptions,
) -> Result<CertReport, GrowthError> {
    let (lx, ly) = (opts.gen_x.lipschitz(), opts.gen_y.lipschitz());
    if !lx.is_finite() || !ly.is_finite() {
        return Err(GrowthError::InfiniteLipschitz);
    }
    let scaled = qgg.scaled(1.0 / lx, 1.0 / ly);
    certify_qfg(p, zstar, &scaled, opts)
}
