use nalgebra::{DMatrix, DVector};

use super::{ProblemError, QuadraticSaddle, SaddleProblem, SmoothnessConstants, SolutionSet};
use crate::geometry::{Generator, SimpleSet};

/// `½(x₁² + x₂²) + (x₁ + x₂)y₁ - y₁² + y₂` on `[0,1]² × [0,1]²`, with its
/// unique saddle point `x* = (0,0)`, `y* = (0,1)`.
///
/// It satisfies two-sided QFG with modulus (1, 1) but not QGG.
pub fn example1_fixture() -> (QuadraticSaddle, SolutionSet) {
    let p = QuadraticSaddle::new(
        DMatrix::identity(2, 2),
        DMatrix::from_row_slice(1, 2, &[std::f64::consts::SQRT_2, 0.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]),
        DVector::zeros(2),
        DVector::from_vec(vec![0.0, 1.0]),
        0.0,
        SimpleSet::unit_box(2),
        SimpleSet::unit_box(2),
    )
    .expect("example 1 dimensions are consistent");
    let z = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
    // Only y₂ <= 1 is active with a nonzero multiplier (∂f/∂y₂ = 1).
    let lambda = DVector::zeros(4);
    let nu = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
    let sol = SolutionSet::from_kkt_point(&p, z, lambda, nu);
    (p, sol)
}

/// The scalar function with `h'(x) = x/2 + (exp(x²) - 1)/x` on `[0, ub]`,
/// normalised to `h(0) = 0`. It has QGG but not QFG with respect to the
/// generator `ψ(x) = ½x² + exp(x²)`.
#[derive(Debug, Clone)]
pub struct Example2 {
    pub ub: f64,
    set_x: SimpleSet,
    set_y: SimpleSet,
}

pub fn example2_fixture(domain_ub: f64) -> Result<Example2, ProblemError> {
    if !(domain_ub > 0.0 && domain_ub.is_finite()) {
        return Err(ProblemError::Domain(format!("upper bound must be positive and finite, got {domain_ub}")));
    }
    Ok(Example2 {
        ub: domain_ub,
        set_x: SimpleSet::Box { lower: DVector::zeros(1), upper: DVector::from_element(1, domain_ub) },
        set_y: SimpleSet::whole(0),
    })
}

impl Example2 {
    fn check(&self, x: f64) -> Result<(), ProblemError> {
        if !(0.0..=self.ub).contains(&x) {
            return Err(ProblemError::Domain(format!("x = {x} outside [0, {}]", self.ub)));
        }
        Ok(())
    }

    pub fn h_prime(&self, x: f64) -> Result<f64, ProblemError> {
        self.check(x)?;
        Ok(h_prime(x))
    }

    pub fn h_second(&self, x: f64) -> Result<f64, ProblemError> {
        self.check(x)?;
        Ok(h_second(x))
    }

    /// `h(x) - h(0)` by adaptive Simpson quadrature of `h'`.
    pub fn h(&self, x: f64) -> Result<f64, ProblemError> {
        self.check(x)?;
        Ok(integrate(h_prime, 0.0, x, 1e-14))
    }

    pub fn generator(&self) -> Generator {
        Generator::ExpQuadratic { lo: 0.0, hi: self.ub }
    }

    /// `D(x, 0) = ½x² + exp(x²) - 1`.
    pub fn bregman_to_min(&self, x: f64) -> Result<f64, ProblemError> {
        self.check(x)?;
        Ok(0.5 * x * x + (x * x).exp_m1())
    }
}

fn h_prime(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Series of exp(x²) - 1 divided by x.
        let x2 = x * x;
        0.5 * x + x * (1.0 + x2 / 2.0 + x2 * x2 / 6.0)
    } else {
        0.5 * x + (x * x).exp_m1() / x
    }
}

fn h_second(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.5 + 1.5 * x2 + 5.0 * x2 * x2 / 6.0
    } else {
        let x2 = x * x;
        0.5 + 2.0 * x2.exp() - x2.exp_m1() / x2
    }
}

fn integrate(f: fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rtol * whole.abs().max(f64::MIN_POSITIVE);
    simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

impl SaddleProblem for Example2 {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        0
    }
    fn eval_f(&self, x: &DVector<f64>, _y: &DVector<f64>) -> f64 {
        integrate(h_prime, 0.0, x[0], 1e-14)
    }
    fn grad_x(&self, x: &DVector<f64>, _y: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, h_prime(x[0]))
    }
    fn grad_y(&self, _x: &DVector<f64>, _y: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn set_x(&self) -> &SimpleSet {
        &self.set_x
    }
    fn set_y(&self) -> &SimpleSet {
        &self.set_y
    }
    /// No y block, so the coupling constants are zero and the constants do
    /// not pass [`SmoothnessConstants::validate`]; this problem is only used
    /// for certification.
    fn smoothness(&self) -> SmoothnessConstants {
        SmoothnessConstants { l_xx: h_second(self.ub), l_xy: 0.0, l_yx: 0.0, l_yy: 0.0 }
    }
}
