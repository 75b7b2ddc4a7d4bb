//! Euclidean projection onto `{x : Ex = e, Gx <= g}` by the Goldfarb-Idnani
//! dual active-set method (the Hessian is the identity, so no factorisation
//! of the objective is needed).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("constraints are infeasible (detected while adding row {row})")]
    Infeasible { row: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("active-set iteration limit {0} reached")]
    IterationLimit(usize),
}

/// Polyhedron `{x : eq_a x = eq_b, ineq_a x <= ineq_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub eq_a: DMatrix<f64>,
    pub eq_b: DVector<f64>,
    pub ineq_a: DMatrix<f64>,
    pub ineq_b: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub point: DVector<f64>,
    /// Multipliers with `x - p + Eᵀ eq_mult + Gᵀ ineq_mult = 0`.
    pub eq_mult: DVector<f64>,
    pub ineq_mult: DVector<f64>,
}

impl Polyhedron {
    pub fn whole(dim: usize) -> Self {
        Self {
            eq_a: DMatrix::zeros(0, dim),
            eq_b: DVector::zeros(0),
            ineq_a: DMatrix::zeros(0, dim),
            ineq_b: DVector::zeros(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.eq_a.ncols()
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        use crate::linalg::{vconcat, vstack};
        Polyhedron {
            eq_a: vstack(&[&self.eq_a, &other.eq_a]),
            eq_b: vconcat(&[&self.eq_b, &other.eq_b]),
            ineq_a: vstack(&[&self.ineq_a, &other.ineq_a]),
            ineq_b: vconcat(&[&self.ineq_b, &other.ineq_b]),
        }
    }

    /// Largest violation of any row (zero when feasible).
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let mut v = 0.0f64;
        if self.eq_a.nrows() > 0 {
            v = v.max((&self.eq_a * x - &self.eq_b).amax());
        }
        if self.ineq_a.nrows() > 0 {
            let r = &self.ineq_a * x - &self.ineq_b;
            v = v.max(r.max().max(0.0));
        }
        v
    }

    pub fn project(&self, p: &DVector<f64>) -> Result<Projection, QpError> {
        project(self, p)
    }
}

struct Row {
    n: DVector<f64>,
    b: f64,
    scale: f64,
    eq: bool,
    orig: usize,
}

/// Solve `min ½‖x - p‖²` over the polyhedron.
pub fn project(poly: &Polyhedron, p: &DVector<f64>) -> Result<Projection, QpError> {
    let d = p.len();
    if poly.eq_a.ncols() != d || poly.ineq_a.ncols() != d {
        return Err(QpError::Dimension(format!(
            "point has {d} entries, constraints have {} / {} columns",
            poly.eq_a.ncols(),
            poly.ineq_a.ncols()
        )));
    }
    let neq = poly.eq_a.nrows();
    let nin = poly.ineq_a.nrows();
    // Rows are normalised so that one tolerance fits all.
    let mut rows = Vec::with_capacity(neq + nin);
    for i in 0..neq {
        let n = poly.eq_a.row(i).transpose();
        let s = n.norm();
        if s == 0.0 {
            if poly.eq_b[i].abs() > 1e-12 {
                return Err(QpError::Infeasible { row: i });
            }
            continue;
        }
        rows.push(Row { n: n / s, b: poly.eq_b[i] / s, scale: s, eq: true, orig: i });
    }
    for i in 0..nin {
        let n = poly.ineq_a.row(i).transpose();
        let s = n.norm();
        if s == 0.0 {
            if poly.ineq_b[i] < -1e-12 {
                return Err(QpError::Infeasible { row: neq + i });
            }
            continue;
        }
        rows.push(Row { n: n / s, b: poly.ineq_b[i] / s, scale: s, eq: false, orig: i });
    }

    let tol = 1e-12 * (1.0 + p.amax() + rows.iter().map(|r| r.b.abs()).fold(0.0, f64::max));
    let mut x = p.clone();
    // Active set: (row index, sign for equalities, multiplier).
    let mut active: Vec<(usize, f64)> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let max_iter = 50 * (rows.len() + d + 1);
    let mut iters = 0;

    let normal = |rows: &Vec<Row>, (r, sgn): (usize, f64)| -> DVector<f64> { &rows[r].n * sgn };

    // Equalities first, then the most violated inequality each round.
    let mut pending_eq: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].eq).collect();
    pending_eq.reverse();
    loop {
        let (ri, sgn) = if let Some(ri) = pending_eq.pop() {
            let s = rows[ri].n.dot(&x) - rows[ri].b;
            (ri, if s < 0.0 { -1.0 } else { 1.0 })
        } else {
            let mut best = None;
            let mut worst = tol;
            for (i, r) in rows.iter().enumerate() {
                if r.eq || active.iter().any(|&(a, _)| a == i) {
                    continue;
                }
                let s = r.n.dot(&x) - r.b;
                if s > worst {
                    worst = s;
                    best = Some(i);
                }
            }
            match best {
                Some(i) => (i, 1.0),
                None => break,
            }
        };
        let nvec = &rows[ri].n * sgn;
        let bval = rows[ri].b * sgn;
        let mut u_new = 0.0;
        loop {
            iters += 1;
            if iters > max_iter {
                return Err(QpError::IterationLimit(max_iter));
            }
            let s = nvec.dot(&x) - bval;
            // r solves N r ≈ n in least squares; z is the residual direction.
            let (r, z) = if active.is_empty() {
                (DVector::zeros(0), nvec.clone())
            } else {
                let mut nmat = DMatrix::zeros(d, active.len());
                for (c, &a) in active.iter().enumerate() {
                    nmat.set_column(c, &normal(&rows, a));
                }
                let qr = nmat.clone().qr();
                let q = qr.q();
                let rr = qr.r();
                let qtn = q.tr_mul(&nvec);
                let r = rr.solve_upper_triangular(&qtn).unwrap_or_else(|| DVector::zeros(active.len()));
                let z = &nvec - &q * qtn;
                (r, z)
            };
            let dependent = z.norm() <= 1e-10;
            if rows[ri].eq && s.abs() <= tol && dependent {
                // Redundant equality.
                break;
            }
            if s <= tol && !rows[ri].eq && u_new == 0.0 {
                break;
            }
            // Dual ratio test over active inequalities.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &(a, _)) in active.iter().enumerate() {
                if !rows[a].eq && r[j] > 1e-14 {
                    let t = mult[j] / r[j];
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            if dependent {
                let Some(k) = drop else {
                    if s.abs() <= tol {
                        break;
                    }
                    return Err(QpError::Infeasible { row: ri });
                };
                for j in 0..active.len() {
                    mult[j] -= t1 * r[j];
                }
                u_new += t1;
                active.remove(k);
                mult.remove(k);
                continue;
            }
            let t2 = s / z.dot(&nvec);
            let t = t1.min(t2);
            x -= &z * t;
            for j in 0..active.len() {
                mult[j] -= t * r[j];
            }
            u_new += t;
            if t2 <= t1 {
                active.push((ri, sgn));
                mult.push(u_new);
                break;
            }
            let k = drop.unwrap();
            active.remove(k);
            mult.remove(k);
        }
    }

    let mut eq_mult = DVector::zeros(neq);
    let mut ineq_mult = DVector::zeros(nin);
    for (&(a, sgn), &u) in active.iter().zip(mult.iter()) {
        let row = &rows[a];
        if row.eq {
            eq_mult[row.orig] += sgn * u / row.scale;
        } else {
            ineq_mult[row.orig] += u / row.scale;
        }
    }
    Ok(Projection { point: x, eq_mult, ineq_mult })
}
