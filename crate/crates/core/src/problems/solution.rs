use nalgebra::{DMatrix, DVector};

use super::{ProblemError, QuadraticSaddle, SaddleProblem};
use crate::linalg::{self, nullspace, pinv, vconcat, vstack};
use crate::qp::Polyhedron;

pub const TOL_KKT: f64 = 1e-9;
/// Cap on the number of equality-constrained systems solved during
/// active-set enumeration.
pub const ENUM_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionKind {
    SinglePoint(DVector<f64>),
    /// `point + span(basis)`, intersected with the inequality rows of
    /// `poly` when it has any.
    Affine { point: DVector<f64>, basis: DMatrix<f64>, poly: Polyhedron },
    Sampled(Vec<DVector<f64>>),
}

/// The saddle-point set `Z*` in stacked coordinates `z = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    pub kind: SolutionKind,
    /// `(λ*, ν*)` for the inequality rows of `X` and `Y`, when unique.
    pub multipliers: Option<(DVector<f64>, DVector<f64>)>,
    /// `{z : Dz = b, Jz <= l}` with the stacked rows of the polyhedral
    /// characterisation; used for Hoffman constants.
    pub description: Option<Polyhedron>,
    pub dim_x: usize,
    pub dim_y: usize,
}

impl SolutionSet {
    /// A representative member.
    pub fn point(&self) -> &DVector<f64> {
        match &self.kind {
            SolutionKind::SinglePoint(z) => z,
            SolutionKind::Affine { point, .. } => point,
            SolutionKind::Sampled(v) => &v[0],
        }
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        match &self.kind {
            SolutionKind::Sampled(v) => v.clone(),
            _ => vec![self.point().clone()],
        }
    }

    pub fn is_single_point(&self) -> bool {
        matches!(self.kind, SolutionKind::SinglePoint(_))
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
        if z.len() != self.dim_x + self.dim_y {
            return Err(ProblemError::Dimension(format!(
                "z has {} entries, solution set lives in dimension {}",
                z.len(),
                self.dim_x + self.dim_y
            )));
        }
        Ok(match &self.kind {
            SolutionKind::SinglePoint(p) => p.clone(),
            SolutionKind::Affine { point, basis, poly } => {
                if poly.ineq_a.nrows() == 0 {
                    point + basis * basis.tr_mul(&(z - point))
                } else {
                    poly.project(z).map_err(|e| ProblemError::NoSolution(e.to_string()))?.point
                }
            }
            SolutionKind::Sampled(v) => v
                .iter()
                .min_by(|a, b| (*a - z).norm_squared().partial_cmp(&(*b - z).norm_squared()).unwrap())
                .unwrap()
                .clone(),
        })
    }

    pub fn dist_sq(&self, z: &DVector<f64>) -> Result<f64, ProblemError> {
        Ok((z - self.project(z)?).norm_squared())
    }

    /// Build the set from one KKT point and its multipliers using the
    /// polyhedral characterisation
    /// `C₁x = C₁x*, Ax = Ax*, diag(λ)Gx = diag(λ)a, C₂y = C₂y*, Aᵀy = Aᵀy*,
    /// diag(ν)Fy = diag(ν)c`, with `Ex = e` rows of `X`, `Y` and `Jz <= l`.
    pub fn from_kkt_point(
        p: &QuadraticSaddle,
        z: DVector<f64>,
        lambda: DVector<f64>,
        nu: DVector<f64>,
    ) -> SolutionSet {
        let n = p.dim_x();
        let m = p.dim_y();
        let px = p.set_x.as_polyhedron();
        let py = p.set_y.as_polyhedron();
        let mut rows: Vec<DMatrix<f64>> = Vec::new();
        let left = |blk: DMatrix<f64>| {
            let mut r = DMatrix::zeros(blk.nrows(), n + m);
            r.view_mut((0, 0), blk.shape()).copy_from(&blk);
            r
        };
        let right = |blk: DMatrix<f64>| {
            let mut r = DMatrix::zeros(blk.nrows(), n + m);
            r.view_mut((0, n), blk.shape()).copy_from(&blk);
            r
        };
        rows.push(left(p.c1.clone()));
        rows.push(left(p.a.clone()));
        rows.push(left(DMatrix::from_diagonal(&lambda) * &px.ineq_a));
        rows.push(left(px.eq_a.clone()));
        rows.push(right(p.c2.clone()));
        rows.push(right(p.a.transpose()));
        rows.push(right(DMatrix::from_diagonal(&nu) * &py.ineq_a));
        rows.push(right(py.eq_a.clone()));
        let refs: Vec<&DMatrix<f64>> = rows.iter().collect();
        let d = vstack(&refs);
        let b = &d * &z;
        let j = linalg::block_diag(&px.ineq_a, &py.ineq_a);
        let l = vconcat(&[&px.ineq_b, &py.ineq_b]);
        let poly = Polyhedron { eq_a: d.clone(), eq_b: b, ineq_a: j, ineq_b: l };
        let basis = nullspace(&d);
        let kind = if basis.ncols() == 0 {
            SolutionKind::SinglePoint(z)
        } else {
            SolutionKind::Affine { point: z, basis, poly: poly.clone() }
        };
        SolutionSet { kind, multipliers: Some((lambda, nu)), description: Some(poly), dim_x: n, dim_y: m }
    }
}

/// Enumerate subsets of rows with linearly independent members (DFS with
/// pruning of dependent supersets).
fn independent_subsets(g: &DMatrix<f64>, max_size: usize, out: &mut Vec<Vec<usize>>, budget: usize) -> Result<(), ProblemError> {
    fn rec(
        g: &DMatrix<f64>,
        start: usize,
        cur: &mut Vec<usize>,
        max_size: usize,
        out: &mut Vec<Vec<usize>>,
        budget: usize,
    ) -> Result<(), ProblemError> {
        out.push(cur.clone());
        if out.len() > budget {
            return Err(ProblemError::Budget(budget));
        }
        if cur.len() == max_size {
            return Ok(());
        }
        for i in start..g.nrows() {
            cur.push(i);
            let sub = DMatrix::from_fn(cur.len(), g.ncols(), |r, c| g[(cur[r], c)]);
            if linalg::rank(&sub) == cur.len() {
                rec(g, i + 1, cur, max_size, out, budget)?;
            }
            cur.pop();
        }
        Ok(())
    }
    rec(g, 0, &mut Vec::new(), max_size, out, budget)
}

/// Saddle points of a quadratic problem.
///
/// Unconstrained problems solve the linear system `F(z) = 0` directly.
/// With inequality rows, every pair of independent active sets is tried and
/// each equality-constrained KKT system solved in the least-squares sense.
pub fn kkt_solution_set(p: &QuadraticSaddle) -> Result<SolutionSet, ProblemError> {
    let n = p.dim_x();
    let m = p.dim_y();
    let polx = p.set_x.as_polyhedron();
    let poly = p.set_y.as_polyhedron();
    let (hx, hy) = p.hessians();
    let (ex, ey) = (polx.eq_a.nrows(), poly.eq_a.nrows());
    let (r, s) = (polx.ineq_a.nrows(), poly.ineq_a.nrows());
    let scale = 1.0 + hx.amax().max(hy.amax()).max(p.a.amax()) + p.lin_x.amax().max(p.lin_y.amax());
    let tol = TOL_KKT * scale;

    let mut sx = Vec::new();
    let mut sy = Vec::new();
    independent_subsets(&polx.ineq_a, n.saturating_sub(ex), &mut sx, ENUM_BUDGET)?;
    independent_subsets(&poly.ineq_a, m.saturating_sub(ey), &mut sy, ENUM_BUDGET)?;
    if sx.len().saturating_mul(sy.len()) > ENUM_BUDGET {
        return Err(ProblemError::Budget(ENUM_BUDGET));
    }

    let mut found: Vec<(DVector<f64>, DVector<f64>, DVector<f64>)> = Vec::new();
    for ax in &sx {
        for ay in &sy {
            let (ka, kb) = (ax.len() + ex, ay.len() + ey);
            let dim = n + m + ka + kb;
            let mut k = DMatrix::zeros(dim, dim);
            let mut rhs = DVector::zeros(dim);
            // Stationarity: ∇x f + Gᵀλ + Eᵀη = 0, ∇y f - Fᵀν - Eᵀω = 0.
            k.view_mut((0, 0), (n, n)).copy_from(hx);
            k.view_mut((0, n), (n, m)).copy_from(&p.a.transpose());
            k.view_mut((n, 0), (m, n)).copy_from(&p.a);
            k.view_mut((n, n), (m, m)).copy_from(&(-hy));
            rhs.rows_mut(0, n).copy_from(&(-&p.lin_x));
            rhs.rows_mut(n, m).copy_from(&(-&p.lin_y));
            let xrows: Vec<(DVector<f64>, f64)> = (0..ex)
                .map(|i| (polx.eq_a.row(i).transpose(), polx.eq_b[i]))
                .chain(ax.iter().map(|&i| (polx.ineq_a.row(i).transpose(), polx.ineq_b[i])))
                .collect();
            let yrows: Vec<(DVector<f64>, f64)> = (0..ey)
                .map(|i| (poly.eq_a.row(i).transpose(), poly.eq_b[i]))
                .chain(ay.iter().map(|&i| (poly.ineq_a.row(i).transpose(), poly.ineq_b[i])))
                .collect();
            for (c, (row, bval)) in xrows.iter().enumerate() {
                let col = n + m + c;
                k.view_mut((0, col), (n, 1)).copy_from(row);
                k.view_mut((col, 0), (1, n)).copy_from(&row.transpose());
                rhs[col] = *bval;
            }
            for (c, (row, bval)) in yrows.iter().enumerate() {
                let col = n + m + ka + c;
                k.view_mut((n, col), (m, 1)).copy_from(&(-row));
                k.view_mut((col, n), (1, m)).copy_from(&row.transpose());
                rhs[col] = *bval;
            }
            let sol = pinv(&k) * &rhs;
            if (&k * &sol - &rhs).amax() > tol {
                continue;
            }
            let x = sol.rows(0, n).into_owned();
            let y = sol.rows(n, m).into_owned();
            let mut lambda = DVector::zeros(r);
            let mut nu = DVector::zeros(s);
            for (c, &i) in ax.iter().enumerate() {
                lambda[i] = sol[n + m + ex + c];
            }
            for (c, &i) in ay.iter().enumerate() {
                nu[i] = sol[n + m + ka + ey + c];
            }
            let feasible = lambda.iter().chain(nu.iter()).all(|&v| v >= -tol)
                && polx.violation(&x) <= tol
                && poly.violation(&y) <= tol;
            if feasible {
                let z = super::stack(&x, &y);
                if !found.iter().any(|(z2, l2, n2)| (z2 - &z).amax() <= tol && (l2 - &lambda).amax() <= tol && (n2 - &nu).amax() <= tol) {
                    found.push((z, lambda.map(|v| v.max(0.0)), nu.map(|v| v.max(0.0))));
                }
            }
        }
    }
    let Some((z, lambda, nu)) = found.first().cloned() else {
        return Err(ProblemError::NoSolution("no active set yields a feasible complementary KKT point".into()));
    };
    let unique_mult = found.iter().all(|(_, l, v)| (l - &lambda).amax() <= tol && (v - &nu).amax() <= tol);
    if unique_mult {
        return Ok(SolutionSet::from_kkt_point(p, z, lambda, nu));
    }
    // Several multiplier vectors: the polyhedral description built from any one
    // of them may miss solutions, so fall back to the sampled points.
    let pts: Vec<DVector<f64>> = found.into_iter().map(|(z, _, _)| z).collect();
    Ok(SolutionSet { kind: SolutionKind::Sampled(pts), multipliers: None, description: None, dim_x: n, dim_y: m })
}
