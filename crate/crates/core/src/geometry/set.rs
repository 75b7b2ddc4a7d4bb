use nalgebra::{DMatrix, DVector};

use super::GeometryError;
use crate::linalg;
use crate::qp::Polyhedron;

/// Closed convex feasible sets with cheap or QP-based projections.
#[derive(Debug, Clone, PartialEq)]
pub enum SimpleSet {
    WholeSpace { dim: usize },
    /// Bounds may be infinite.
    Box { lower: DVector<f64>, upper: DVector<f64> },
    /// `{x : g x <= a}`.
    Halfspaces { g: DMatrix<f64>, a: DVector<f64> },
    /// `{x : a x = b}`.
    Affine { a: DMatrix<f64>, b: DVector<f64> },
    /// `{x >= 0 : Σ xᵢ = radius}`.
    Simplex { dim: usize, radius: f64 },
}

impl SimpleSet {
    pub fn whole(dim: usize) -> Self {
        SimpleSet::WholeSpace { dim }
    }

    pub fn boxed(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::Dimension { expected: lower.len(), got: upper.len() });
        }
        for i in 0..lower.len() {
            if lower[i].is_nan() || upper[i].is_nan() || lower[i] > upper[i] || lower[i] == f64::INFINITY || upper[i] == f64::NEG_INFINITY {
                return Err(GeometryError::InvalidSet(format!(
                    "box coordinate {i} has empty interval [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(SimpleSet::Box { lower, upper })
    }

    pub fn unit_box(dim: usize) -> Self {
        SimpleSet::Box { lower: DVector::zeros(dim), upper: DVector::from_element(dim, 1.0) }
    }

    pub fn halfspaces(g: DMatrix<f64>, a: DVector<f64>) -> Result<Self, GeometryError> {
        if g.nrows() != a.len() {
            return Err(GeometryError::Dimension { expected: g.nrows(), got: a.len() });
        }
        let set = SimpleSet::Halfspaces { g, a };
        set.check_nonempty()?;
        Ok(set)
    }

    pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, GeometryError> {
        if a.nrows() != b.len() {
            return Err(GeometryError::Dimension { expected: a.nrows(), got: b.len() });
        }
        let set = SimpleSet::Affine { a, b };
        set.check_nonempty()?;
        Ok(set)
    }

    pub fn simplex(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) || dim == 0 {
            return Err(GeometryError::InvalidSet(format!("simplex needs dim >= 1 and radius > 0, got {dim}, {radius}")));
        }
        Ok(SimpleSet::Simplex { dim, radius })
    }

    fn check_nonempty(&self) -> Result<(), GeometryError> {
        let origin = DVector::zeros(self.dim());
        match self.project_euclidean(&origin) {
            Ok(p) if self.contains(&p, 1e-8 * (1.0 + p.amax())) => Ok(()),
            _ => Err(GeometryError::InvalidSet("constraints define an empty set".into())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SimpleSet::WholeSpace { dim } | SimpleSet::Simplex { dim, .. } => *dim,
            SimpleSet::Box { lower, .. } => lower.len(),
            SimpleSet::Halfspaces { g, .. } => g.ncols(),
            SimpleSet::Affine { a, .. } => a.ncols(),
        }
    }

    /// True when projection is coordinate-wise.
    pub fn is_separable(&self) -> bool {
        matches!(self, SimpleSet::WholeSpace { .. } | SimpleSet::Box { .. })
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            SimpleSet::WholeSpace { .. } => true,
            SimpleSet::Box { lower, upper } => (0..x.len()).all(|i| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol),
            _ => self.as_polyhedron().violation(x) <= tol,
        }
    }

    /// Inequality/equality description of the set.
    pub fn as_polyhedron(&self) -> Polyhedron {
        let n = self.dim();
        match self {
            SimpleSet::WholeSpace { .. } => Polyhedron::whole(n),
            SimpleSet::Box { lower, upper } => {
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for i in 0..n {
                    if upper[i].is_finite() {
                        let mut r = DVector::zeros(n);
                        r[i] = 1.0;
                        rows.push(r);
                        rhs.push(upper[i]);
                    }
                }
                for i in 0..n {
                    if lower[i].is_finite() {
                        let mut r = DVector::zeros(n);
                        r[i] = -1.0;
                        rows.push(r);
                        rhs.push(-lower[i]);
                    }
                }
                let mut g = DMatrix::zeros(rows.len(), n);
                for (k, r) in rows.iter().enumerate() {
                    g.set_row(k, &r.transpose());
                }
                Polyhedron { ineq_a: g, ineq_b: DVector::from_vec(rhs), ..Polyhedron::whole(n) }
            }
            SimpleSet::Halfspaces { g, a } => Polyhedron { ineq_a: g.clone(), ineq_b: a.clone(), ..Polyhedron::whole(n) },
            SimpleSet::Affine { a, b } => Polyhedron { eq_a: a.clone(), eq_b: b.clone(), ..Polyhedron::whole(n) },
            SimpleSet::Simplex { radius, .. } => Polyhedron {
                eq_a: DMatrix::from_element(1, n, 1.0),
                eq_b: DVector::from_element(1, *radius),
                ineq_a: -DMatrix::<f64>::identity(n, n),
                ineq_b: DVector::zeros(n),
            },
        }
    }

    /// Finite componentwise bounds, when the set has them.
    pub fn bounds(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        match self {
            SimpleSet::Box { lower, upper } if lower.iter().chain(upper.iter()).all(|v| v.is_finite()) => {
                Some((lower.clone(), upper.clone()))
            }
            SimpleSet::Simplex { dim, radius } => Some((DVector::zeros(*dim), DVector::from_element(*dim, *radius))),
            _ => None,
        }
    }

    pub fn project_euclidean(&self, p: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::Dimension { expected: self.dim(), got: p.len() });
        }
        Ok(match self {
            SimpleSet::WholeSpace { .. } => p.clone(),
            SimpleSet::Box { lower, upper } => DVector::from_fn(p.len(), |i, _| p[i].max(lower[i]).min(upper[i])),
            SimpleSet::Simplex { radius, .. } => project_simplex(p, *radius),
            SimpleSet::Affine { a, b } => {
                // p - A⁺(Ap - b)
                let r = a * p - b;
                p - linalg::pinv(a) * r
            }
            SimpleSet::Halfspaces { .. } => self.as_polyhedron().project(p)?.point,
        })
    }

    /// Projection in the norm `‖v‖_W² = Σ wᵢ vᵢ²`.
    pub fn project_weighted(&self, p: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        if self.is_separable() {
            return self.project_euclidean(p);
        }
        let sqrt_w = w.map(f64::sqrt);
        let mut poly = self.as_polyhedron();
        for j in 0..p.len() {
            let s = 1.0 / sqrt_w[j];
            poly.eq_a.column_mut(j).scale_mut(s);
            poly.ineq_a.column_mut(j).scale_mut(s);
        }
        let u = poly.project(&p.component_mul(&sqrt_w))?.point;
        Ok(u.component_div(&sqrt_w))
    }
}

/// Sort-based projection onto `{x >= 0, Σ x = r}`.
fn project_simplex(p: &DVector<f64>, r: f64) -> DVector<f64> {
    let mut u: Vec<f64> = p.iter().cloned().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut shift = 0.0;
    for (k, &v) in u.iter().enumerate() {
        css += v;
        let t = (css - r) / (k as f64 + 1.0);
        if v - t > 0.0 {
            shift = t;
        }
    }
    p.map(|v| (v - shift).max(0.0))
}
