use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::GeometryError;

/// User-supplied distance-generating function. It must be 1-strongly convex
/// with respect to the Euclidean norm on its domain.
pub trait CustomGenerator: Send + Sync + fmt::Debug {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn grad(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Gradient Lipschitz constant, `None` when unbounded.
    fn lipschitz(&self) -> Option<f64>;
}

/// A distance-generating function `ψ` and therefore a Bregman distance
/// `D(x, y) = ψ(x) - ψ(y) - ⟨∇ψ(y), x - y⟩`.
#[derive(Debug, Clone)]
pub enum Generator {
    Euclidean,
    /// `ψ(x) = ½ Σ wᵢ xᵢ²` with every weight at least 1.
    DiagQuadratic { weights: DVector<f64> },
    /// `ψ(x) = Σ ½xᵢ² + exp(xᵢ²)` on the box `[lo, hi]ⁿ`.
    ExpQuadratic { lo: f64, hi: f64 },
    Custom(Arc<dyn CustomGenerator>),
}

impl Generator {
    pub fn diag_quadratic(weights: DVector<f64>) -> Result<Self, GeometryError> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 1.0)) {
            return Err(GeometryError::InvalidGenerator(format!(
                "diagonal weights must be finite and >= 1 for unit strong convexity, got {w}"
            )));
        }
        Ok(Generator::DiagQuadratic { weights })
    }

    pub fn exp_quadratic(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(GeometryError::InvalidGenerator(format!("empty domain [{lo}, {hi}]")));
        }
        Ok(Generator::ExpQuadratic { lo, hi })
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Generator::Euclidean)
    }

    /// Lipschitz constant of `∇ψ` (infinite for unbounded exp domains or
    /// custom generators without one).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Generator::Euclidean => 1.0,
            Generator::DiagQuadratic { weights } => weights.max(),
            Generator::ExpQuadratic { lo, hi } => {
                let t = lo.abs().max(hi.abs());
                if !t.is_finite() {
                    return f64::INFINITY;
                }
                let t2 = t * t;
                1.0 + (2.0 + 4.0 * t2) * t2.exp()
            }
            Generator::Custom(c) => c.lipschitz().unwrap_or(f64::INFINITY),
        }
    }

    /// Componentwise domain bounds, if the generator restricts the domain.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            Generator::ExpQuadratic { lo, hi } => Some((*lo, *hi)),
            _ => None,
        }
    }

    pub(crate) fn check_point(&self, x: &DVector<f64>) -> Result<(), GeometryError> {
        if let Generator::DiagQuadratic { weights } = self {
            if weights.len() != x.len() {
                return Err(GeometryError::Dimension { expected: weights.len(), got: x.len() });
            }
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeometryError::OutOfDomain { index: i, value: v });
            }
        }
        if let Some((lo, hi)) = self.domain() {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()).min(1e300));
            if let Some((i, &v)) = x.iter().enumerate().find(|(_, &v)| v < lo - slack || v > hi + slack) {
                return Err(GeometryError::OutOfDomain { index: i, value: v });
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        self.check_point(x)?;
        Ok(match self {
            Generator::Euclidean => 0.5 * x.norm_squared(),
            Generator::DiagQuadratic { weights } => 0.5 * x.iter().zip(weights.iter()).map(|(v, w)| w * v * v).sum::<f64>(),
            Generator::ExpQuadratic { .. } => x.iter().map(|v| 0.5 * v * v + (v * v).exp()).sum(),
            Generator::Custom(c) => c.value(x),
        })
    }

    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_point(x)?;
        Ok(match self {
            Generator::Euclidean => x.clone(),
            Generator::DiagQuadratic { weights } => x.component_mul(weights),
            Generator::ExpQuadratic { .. } => x.map(exp_dphi),
            Generator::Custom(c) => c.grad(x),
        })
    }

    /// Bregman distance `D(x, y)`, evaluated in a cancellation-free form for
    /// the built-in generators.
    pub fn bregman(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, GeometryError> {
        if x.len() != y.len() {
            return Err(GeometryError::Dimension { expected: y.len(), got: x.len() });
        }
        self.check_point(x)?;
        self.check_point(y)?;
        let d = match self {
            Generator::Euclidean => 0.5 * (x - y).norm_squared(),
            Generator::DiagQuadratic { weights } => {
                0.5 * x.iter().zip(y.iter()).zip(weights.iter()).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>()
            }
            Generator::ExpQuadratic { .. } => x
                .iter()
                .zip(y.iter())
                .map(|(&a, &b)| {
                    let h = a - b;
                    // e^{a²} - e^{b²} - 2b e^{b²}(a - b) = e^{b²}(expm1(a² - b²) - 2bh)
                    0.5 * h * h + (b * b).exp() * ((h * (a + b)).exp_m1() - 2.0 * b * h)
                })
                .sum(),
            Generator::Custom(c) => c.value(x) - c.value(y) - c.grad(y).dot(&(x - y)),
        };
        Ok(d.max(0.0))
    }
}

pub(crate) fn exp_dphi(v: f64) -> f64 {
    v + 2.0 * v * (v * v).exp()
}

pub(crate) fn exp_d2phi(v: f64) -> f64 {
    1.0 + (2.0 + 4.0 * v * v) * (v * v).exp()
}
