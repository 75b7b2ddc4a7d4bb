use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ProblemError, SaddleProblem, SmoothnessConstants};
use crate::geometry::SimpleSet;
use crate::linalg::spectral_norm;
use crate::rng;

const POWER_RTOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// `f(x, y) = ½‖C₁x‖² + ⟨lin_x, x⟩ + ⟨Ax, y⟩ + ⟨lin_y, y⟩ - ½‖C₂y‖² + constant`.
///
/// Every quadratic convex-concave function with PSD blocks factored as
/// `C₁ᵀC₁`, `C₂ᵀC₂` has this form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddle {
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub lin_x: DVector<f64>,
    pub lin_y: DVector<f64>,
    pub constant: f64,
    pub set_x: SimpleSet,
    pub set_y: SimpleSet,
    px: DMatrix<f64>,
    py: DMatrix<f64>,
    smooth: SmoothnessConstants,
}

impl QuadraticSaddle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: DMatrix<f64>,
        c2: DMatrix<f64>,
        a: DMatrix<f64>,
        lin_x: DVector<f64>,
        lin_y: DVector<f64>,
        constant: f64,
        set_x: SimpleSet,
        set_y: SimpleSet,
    ) -> Result<Self, ProblemError> {
        let n = c1.ncols();
        let m = c2.ncols();
        let checks = [
            (a.nrows() == m && a.ncols() == n, format!("A is {}x{}, expected {m}x{n}", a.nrows(), a.ncols())),
            (lin_x.len() == n, format!("lin_x has {} entries, expected {n}", lin_x.len())),
            (lin_y.len() == m, format!("lin_y has {} entries, expected {m}", lin_y.len())),
            (set_x.dim() == n, format!("set_x has dim {}, expected {n}", set_x.dim())),
            (set_y.dim() == m, format!("set_y has dim {}, expected {m}", set_y.dim())),
        ];
        if let Some((_, msg)) = checks.into_iter().find(|(ok, _)| !ok) {
            return Err(ProblemError::Dimension(msg));
        }
        let px = c1.tr_mul(&c1);
        let py = c2.tr_mul(&c2);
        let nc1 = spectral_norm(&c1, POWER_RTOL, POWER_MAX_ITER);
        let nc2 = spectral_norm(&c2, POWER_RTOL, POWER_MAX_ITER);
        let na = spectral_norm(&a, POWER_RTOL, POWER_MAX_ITER);
        let smooth = SmoothnessConstants { l_xx: nc1 * nc1, l_xy: na, l_yx: na, l_yy: nc2 * nc2 };
        Ok(Self { c1, c2, a, lin_x, lin_y, constant, set_x, set_y, px, py, smooth })
    }

    /// Hessian blocks `C₁ᵀC₁` and `C₂ᵀC₂`.
    pub fn hessians(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.px, &self.py)
    }
}

impl SaddleProblem for QuadraticSaddle {
    fn dim_x(&self) -> usize {
        self.c1.ncols()
    }
    fn dim_y(&self) -> usize {
        self.c2.ncols()
    }
    fn eval_f(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        0.5 * (&self.c1 * x).norm_squared() + self.lin_x.dot(x) + y.dot(&(&self.a * x)) + self.lin_y.dot(y)
            - 0.5 * (&self.c2 * y).norm_squared()
            + self.constant
    }
    fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.px * x + &self.lin_x + self.a.tr_mul(y)
    }
    fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.lin_y - &self.py * y
    }
    fn set_x(&self) -> &SimpleSet {
        &self.set_x
    }
    fn set_y(&self) -> &SimpleSet {
        &self.set_y
    }
    fn smoothness(&self) -> SmoothnessConstants {
        self.smooth
    }
}

/// Terms of the supported quadratic family, used by [`make_fenchel`].
#[derive(Debug, Clone, PartialEq)]
pub enum QuadTerm {
    /// `u ↦ ½‖u - b‖²`.
    HalfSqResidual { b: DVector<f64> },
    /// Huber loss; accepted as input only to be rejected, it has no
    /// quadratic conjugate.
    Huber { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub constructor: String,
    pub seed: Option<u64>,
    pub coupling_std: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// `h(C₁x) + ⟨Ax, y⟩ - g(C₂y)` with `h = ½‖· - b₁‖²`, `g = ½‖· - b₂‖²`,
/// plus a constant `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredProblem {
    pub quad: QuadraticSaddle,
    pub b1: DVector<f64>,
    pub b2: DVector<f64>,
    pub offset: f64,
    pub kappa_x: f64,
    pub kappa_y: f64,
    pub meta: ProblemMeta,
}

impl StructuredProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: DMatrix<f64>,
        c2: DMatrix<f64>,
        a: DMatrix<f64>,
        b1: DVector<f64>,
        b2: DVector<f64>,
        offset: f64,
        set_x: SimpleSet,
        set_y: SimpleSet,
        meta: ProblemMeta,
    ) -> Result<Self, ProblemError> {
        if b1.len() != c1.nrows() || b2.len() != c2.nrows() {
            return Err(ProblemError::Dimension(format!(
                "b1/b2 have {}/{} entries, C1/C2 have {}/{} rows",
                b1.len(),
                b2.len(),
                c1.nrows(),
                c2.nrows()
            )));
        }
        let lin_x = -c1.tr_mul(&b1);
        let lin_y = c2.tr_mul(&b2);
        let constant = 0.5 * b1.norm_squared() - 0.5 * b2.norm_squared() + offset;
        let quad = QuadraticSaddle::new(c1, c2, a, lin_x, lin_y, constant, set_x, set_y)?;
        Ok(Self { quad, b1, b2, offset, kappa_x: 1.0, kappa_y: 1.0, meta })
    }

    pub fn c1(&self) -> &DMatrix<f64> {
        &self.quad.c1
    }
    pub fn c2(&self) -> &DMatrix<f64> {
        &self.quad.c2
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.quad.a
    }
    /// Sizes `(n, m, p, q)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.quad.c1.ncols(), self.quad.c2.ncols(), self.quad.c1.nrows(), self.quad.c2.nrows())
    }
}

impl SaddleProblem for StructuredProblem {
    fn dim_x(&self) -> usize {
        self.quad.dim_x()
    }
    fn dim_y(&self) -> usize {
        self.quad.dim_y()
    }
    fn eval_f(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.quad.eval_f(x, y)
    }
    fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.quad.grad_x(x, y)
    }
    fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.quad.grad_y(x, y)
    }
    fn set_x(&self) -> &SimpleSet {
        &self.quad.set_x
    }
    fn set_y(&self) -> &SimpleSet {
        &self.quad.set_y
    }
    fn smoothness(&self) -> SmoothnessConstants {
        self.quad.smoothness()
    }
}

fn rank_warnings(n: usize, m: usize, p: usize, q: usize) -> Vec<String> {
    let mut w = Vec::new();
    if p >= n {
        w.push(format!("p = {p} >= n = {n}: C1 may have full column rank, so f can be strongly convex in x"));
    }
    if q >= m {
        w.push(format!("q = {q} >= m = {m}: C2 may have full column rank, so f can be strongly concave in y"));
    }
    w
}

/// Random unconstrained instance with Gaussian data. Draw order on stream 0 of
/// `seed`: C₁, C₂, A, b₁, b₂, each row-major.
pub fn make_random_quadratic(
    n: usize,
    m: usize,
    p: usize,
    q: usize,
    seed: u64,
    coupling_std: f64,
) -> Result<StructuredProblem, ProblemError> {
    if !(coupling_std > 0.0 && coupling_std.is_finite()) {
        return Err(ProblemError::Dimension(format!("coupling_std must be positive, got {coupling_std}")));
    }
    let mut r = rng::stream(seed, 0);
    let c1 = rng::gaussian_matrix(&mut r, p, n, 1.0);
    let c2 = rng::gaussian_matrix(&mut r, q, m, 1.0);
    let a = rng::gaussian_matrix(&mut r, m, n, coupling_std);
    let b1 = rng::gaussian_vector(&mut r, p, 1.0);
    let b2 = rng::gaussian_vector(&mut r, q, 1.0);
    let meta = ProblemMeta {
        constructor: "random_quadratic".into(),
        seed: Some(seed),
        coupling_std: Some(coupling_std),
        warnings: rank_warnings(n, m, p, q),
    };
    StructuredProblem::new(c1, c2, a, b1, b2, 0.0, SimpleSet::whole(n), SimpleSet::whole(m), meta)
}

/// Random instance whose coupling factors as `A = C₂ᵀ K C₁`, so that
/// `ker C₁ ⊆ ker A` and `ker C₂ ⊆ ker Aᵀ` hold exactly. `A` is rescaled to
/// an entrywise RMS of `coupling_std`.
pub fn make_admissible_quadratic(
    n: usize,
    m: usize,
    p: usize,
    q: usize,
    seed: u64,
    coupling_std: f64,
) -> Result<StructuredProblem, ProblemError> {
    if !(coupling_std > 0.0 && coupling_std.is_finite()) {
        return Err(ProblemError::Dimension(format!("coupling_std must be positive, got {coupling_std}")));
    }
    let mut r = rng::stream(seed, 1);
    let c1 = rng::gaussian_matrix(&mut r, p, n, 1.0);
    let c2 = rng::gaussian_matrix(&mut r, q, m, 1.0);
    let k = rng::gaussian_matrix(&mut r, q, p, 1.0);
    let b1 = rng::gaussian_vector(&mut r, p, 1.0);
    let b2 = rng::gaussian_vector(&mut r, q, 1.0);
    let mut a = c2.tr_mul(&(&k * &c1));
    let rms = (a.norm_squared() / (a.len().max(1) as f64)).sqrt();
    if rms > 0.0 {
        a *= coupling_std / rms;
    }
    let meta = ProblemMeta {
        constructor: "admissible_quadratic".into(),
        seed: Some(seed),
        coupling_std: Some(coupling_std),
        warnings: rank_warnings(n, m, p, q),
    };
    StructuredProblem::new(c1, c2, a, b1, b2, 0.0, SimpleSet::whole(n), SimpleSet::whole(m), meta)
}

/// Saddle form of `min_x f₁(B₁x) + f₂(B₂x)`:
/// `f₁(B₁x) + ⟨B₂x, y⟩ - f₂*(y)`, with `f₂*(y) = ½‖y‖² + ⟨b, y⟩` for
/// `f₂ = ½‖· - b‖²`.
pub fn make_fenchel(
    f1: &QuadTerm,
    b1_mat: DMatrix<f64>,
    f2: &QuadTerm,
    b2_mat: DMatrix<f64>,
) -> Result<StructuredProblem, ProblemError> {
    let QuadTerm::HalfSqResidual { b: b1 } = f1 else {
        return Err(ProblemError::UnsupportedConjugate("f1 must be a half squared residual".into()));
    };
    let QuadTerm::HalfSqResidual { b } = f2 else {
        return Err(ProblemError::UnsupportedConjugate(
            "the conjugate of f2 is not in the quadratic family".into(),
        ));
    };
    if b1_mat.ncols() != b2_mat.ncols() {
        return Err(ProblemError::Dimension("B1 and B2 must act on the same x".into()));
    }
    let n = b1_mat.ncols();
    let m = b2_mat.nrows();
    // -f₂*(y) = -½‖y - (-b)‖² + ½‖b‖².
    let meta = ProblemMeta { constructor: "fenchel".into(), ..Default::default() };
    StructuredProblem::new(
        b1_mat,
        DMatrix::identity(m, m),
        b2_mat,
        b1.clone(),
        -b,
        0.5 * b.norm_squared(),
        SimpleSet::whole(n),
        SimpleSet::whole(m),
        meta,
    )
}
