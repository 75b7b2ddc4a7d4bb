use proptest::prelude::*;
use sella::geometry::SimpleSet;
use sella::growth::*;
use sella::problems::*;
use sella::solver::*;
use sella::{DMatrix, DVector};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

/// `f(x, y) = xy` on the real line.
fn bilinear_xy() -> QuadraticSaddle {
    QuadraticSaddle::new(
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        DVector::zeros(1),
        DVector::zeros(1),
        0.0,
        SimpleSet::whole(1),
        SimpleSet::whole(1),
    )
    .unwrap()
}

fn scsc(seed: u64, boxed: bool) -> StructuredProblem {
    let mut r = sella::rng::stream(seed, 0);
    let c1 = sella::rng::gaussian_matrix(&mut r, 3, 3, 1.0) + DMatrix::identity(3, 3) * 2.0;
    let c2 = sella::rng::gaussian_matrix(&mut r, 2, 2, 1.0) + DMatrix::identity(2, 2) * 2.0;
    let a = sella::rng::gaussian_matrix(&mut r, 2, 3, 1.0);
    let b1 = sella::rng::gaussian_vector(&mut r, 3, 2.0);
    let b2 = sella::rng::gaussian_vector(&mut r, 2, 2.0);
    let (sx, sy) = if boxed {
        (SimpleSet::boxed(v(&[-0.5; 3]), v(&[0.5; 3])).unwrap(), SimpleSet::boxed(v(&[-0.5; 2]), v(&[0.5; 2])).unwrap())
    } else {
        (SimpleSet::whole(3), SimpleSet::whole(2))
    };
    StructuredProblem::new(c1, c2, a, b1, b2, 0.0, sx, sy, ProblemMeta::default()).unwrap()
}

struct Desk {
    p: StructuredProblem,
    zs: SolutionSet,
    moduli: GrowthModuli,
}

fn desk(seed: u64) -> Desk {
    let p = make_random_quadratic(20, 16, 16, 12, seed, 5.0).unwrap();
    let zs = kkt_solution_set(&p.quad).unwrap();
    let d = derive_moduli(&p, &zs, &HoffmanOptions::default(), true).unwrap();
    Desk { p, zs, moduli: d.moduli.with_condition(GrowthCondition::TwoSidedQfg) }
}

fn zeros(p: &dyn SaddleProblem) -> (DVector<f64>, DVector<f64>) {
    (DVector::zeros(p.dim_x()), DVector::zeros(p.dim_y()))
}

#[test]
fn hand_executed_gapd_step() {
    let p = bilinear_xy();
    let prm = GapdParams::manual(1.0, 0.5, 0.0, 0.1, 0.1).unwrap();
    let st = IterateState::new(&p, v(&[1.0]), v(&[1.0])).unwrap();
    assert_eq!(st.qx[0], 0.0);
    let s1 = gapd_step(&p, &Geometries::euclidean(), &prm, &st).unwrap();
    assert!((s1.y[0] - 1.1).abs() <= 1e-15);
    assert!((s1.x[0] - 0.89).abs() <= 1e-15);
    // q₁ = (∇x f(z₁) - ∇x f(z₀), ∇y f(z₁) - ∇y f(z₀)) = (0.1, -0.11).
    assert!((s1.qx[0] - 0.1).abs() <= 1e-15);
    assert!((s1.qy[0] + 0.11).abs() <= 1e-15);
    assert_eq!(s1.x_prev, st.x);
    assert_eq!(s1.k, 1);
}

#[test]
fn hand_executed_gda_step() {
    let p = bilinear_xy();
    let st = IterateState::new(&p, v(&[1.0]), v(&[1.0])).unwrap();
    let s1 = gda_step(&p, &Geometries::euclidean(), 0.1, 0.1, &st).unwrap();
    assert!((s1.x[0] - 0.9).abs() <= 1e-15);
    assert!((s1.y[0] - 1.1).abs() <= 1e-15);
    assert!(gda_step(&p, &Geometries::euclidean(), 0.0, 0.1, &st).is_err());
}

#[test]
fn interior_saddle_is_a_fixed_point() {
    let p = scsc(3, false);
    let zs = kkt_solution_set(&p.quad).unwrap();
    let (x, y) = split(&p, zs.point()).unwrap();
    let geo = Geometries::euclidean();
    let prm = GapdParams::manual(0.5, 0.9, 0.45, 0.1, 0.1).unwrap();
    // Use the exact zero-gradient point of the computed solution, then
    // iterate: each step must reproduce it up to the gradient at z*.
    let st = IterateState::new(&p, x.clone(), y.clone()).unwrap();
    let g = (st.gx.norm_squared() + st.gy.norm_squared()).sqrt();
    let mut a = st.clone();
    let mut b = st.clone();
    for _ in 0..20 {
        a = gapd_step(&p, &geo, &prm, &a).unwrap();
        b = gda_step(&p, &geo, 0.1, 0.1, &b).unwrap();
    }
    assert!((&a.x - &x).norm() + (&a.y - &y).norm() <= 10.0 * g + 1e-13);
    assert!((&b.x - &x).norm() + (&b.y - &y).norm() <= 10.0 * g + 1e-13);

    // With an exact zero gradient the iterates do not move at all.
    let p0 = bilinear_xy();
    let st = IterateState::new(&p0, v(&[0.0]), v(&[0.0])).unwrap();
    let s = gapd_step(&p0, &geo, &prm, &st).unwrap();
    assert_eq!((s.x[0], s.y[0]), (0.0, 0.0));
}

#[test]
fn theta_zero_does_not_read_the_new_dual_point() {
    let p = scsc(4, true);
    let geo = Geometries::euclidean();
    let prm = GapdParams::manual(0.0, 0.8, 0.8, 0.05, 0.07).unwrap();
    let mut st = IterateState::new(&p, v(&[0.1, -0.2, 0.3]), v(&[0.2, -0.1])).unwrap();
    for _ in 0..5 {
        let next = gapd_step(&p, &geo, &prm, &st).unwrap();
        // Primal first, then dual.
        let s = &st.gx + &st.qx * prm.beta;
        let x1 = p.set_x().project_euclidean(&(&st.x - s * prm.tau)).unwrap();
        let y1 = p.set_y().project_euclidean(&(&st.y + (&st.gy + &st.qy * prm.alpha) * prm.sigma)).unwrap();
        assert!((&next.x - x1).amax() <= 1e-15);
        assert!((&next.y - y1).amax() <= 1e-15);
        st = next;
    }
}

#[test]
fn special_case_betas() {
    let sm = SmoothnessConstants { l_xx: 2.0, l_xy: 3.0, l_yx: 3.0, l_yy: 1.0 };
    let m = GrowthModuli::new(0.1, 0.2, GrowthCondition::Both).unwrap();
    let p1 = derive_params(&sm, &m, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(p1.beta, 0.0);
    let p0 = derive_params(&sm, &m, 0.0, 1.0, 1.0).unwrap();
    assert_eq!(p0.beta, p0.alpha);
    let ph = derive_params(&sm, &m, 0.5, 1.0, 1.0).unwrap();
    assert!((ph.beta - 0.5 * ph.alpha).abs() <= 1e-15);
}

#[test]
fn unit_constants_schedule_satisfies_the_conditions() {
    let sm = SmoothnessConstants { l_xx: 1.0, l_xy: 1.0, l_yx: 1.0, l_yy: 1.0 };
    let m = GrowthModuli::new(1.0, 1.0, GrowthCondition::TwoSidedQfg).unwrap();
    let p = derive_params(&sm, &m, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(p.varsigma, 1.0);
    assert!(p.alpha > 0.0 && p.alpha < 1.0);
    assert!((p.gamma_x - 2.0).abs() <= 1e-15 && (p.gamma_y - 2.0).abs() <= 1e-15);
    // Schedule formulas.
    let u = p.one_minus_alpha;
    assert!((p.tau - 2.0 * u / (p.alpha)).abs() <= 1e-12 * p.tau);
    assert!((p.sigma - 2.0 * u / (p.alpha)).abs() <= 1e-12 * p.sigma);
    let chk = verify_params(&p).unwrap();
    assert!(chk.passes(1e-12), "{chk:?}");
    let (wx, wy) = p.lyapunov_weights();
    assert!(wx > 0.0 && wy > 0.0);

    // Growth-adjusted weights dominate the plain ones: α(1/σ + ςμ/2) >= 1/σ.
    let cond_b = p.alpha * (1.0 / p.sigma + 0.5) - 1.0 / p.sigma;
    assert!(cond_b >= -1e-12 / p.sigma, "{cond_b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn derived_schedules_verify(
        lxx in 0.0f64..5.0, lxy in 0.1f64..5.0, lyy in 0.0f64..5.0,
        mux in 1e-3f64..1.0, muy in 1e-3f64..1.0, theta in 0.0f64..=1.0,
        lpx in 1.0f64..3.0, lpy in 1.0f64..3.0, qgg in any::<bool>(),
    ) {
        let sm = SmoothnessConstants { l_xx: lxx, l_xy: lxy, l_yx: lxy, l_yy: lyy };
        let cond = if qgg { GrowthCondition::TwoSidedQgg } else { GrowthCondition::TwoSidedQfg };
        let m = GrowthModuli::new(mux, muy, cond).unwrap();
        match derive_params(&sm, &m, theta, lpx, lpy) {
            Ok(p) => {
                let chk = verify_params(&p).unwrap();
                prop_assert!(chk.passes(1e-10), "{:?}", chk);
                prop_assert!((p.beta - p.alpha * (1.0 - theta)).abs() <= 1e-15);
                let (wx, wy) = p.lyapunov_weights();
                prop_assert!(wx > 0.0 && wy > 0.0);
            }
            // QFG at θ = 0 has ς = 0 and no schedule.
            Err(SolverError::NoContractiveSchedule { .. }) => prop_assert!(!qgg && theta == 0.0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn derive_params_rejects_bad_input() {
    let sm = SmoothnessConstants { l_xx: 1.0, l_xy: 1.0, l_yx: 1.0, l_yy: 1.0 };
    let m = GrowthModuli::new(1.0, 1.0, GrowthCondition::Both).unwrap();
    assert!(derive_params(&sm, &m, 1.5, 1.0, 1.0).is_err());
    assert!(derive_params(&sm, &m, 1.0, 0.5, 1.0).is_err());
    assert!(derive_params(&sm, &m, 1.0, 1.0, f64::INFINITY).is_err());
    let bad = SmoothnessConstants { l_yx: 0.0, ..sm };
    assert!(derive_params(&bad, &m, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn rate_power_is_stable_near_one() {
    let p = GapdParams::manual(1.0, 1.0 - 1e-12, 0.0, 1.0, 1.0).unwrap();
    let want = (-1e-12f64 * 1e6).exp();
    assert!((p.rate_power(1_000_000) - want).abs() <= 1e-9 * want);
    assert_eq!(p.rate_power(0), 1.0);
}

#[test]
fn gda_step_rules() {
    let sm = SmoothnessConstants { l_xx: 2.0, l_xy: 3.0, l_yx: 1.0, l_yy: 1.0 };
    let m = GrowthModuli::new(0.5, 0.25, GrowthCondition::Both).unwrap();
    let h = gda_steps(&sm, &m, GdaStepRule::Heuristic).unwrap();
    assert_eq!(h.step_x, 0.5 / 5.0);
    let t = gda_steps(&sm, &m, GdaStepRule::Theory).unwrap();
    assert_eq!(t.step_x, 0.25 / 20.0);
}

#[test]
fn residual_examples() {
    let q = QuadraticSaddle::new(
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        v(&[2.0]),
        v(&[-5.0]),
        0.0,
        SimpleSet::whole(1),
        SimpleSet::whole(1),
    )
    .unwrap();
    // F(1, 1) = (1 + 2, -(1 - 5)) = (3, 4).
    assert!((residual(&q, &v(&[1.0, 1.0])).unwrap() - 5.0).abs() <= 1e-15);
    let (e1, zs) = example1_fixture();
    assert_eq!(residual(&e1, zs.point()).unwrap(), 0.0);
    assert!(residual(&e1, &v(&[0.5, 0.5, 0.5, 0.5])).unwrap() > 0.0);
}

#[test]
fn scsc_run_reaches_tight_tolerance() {
    let p = scsc(1, false);
    let zs = kkt_solution_set(&p.quad).unwrap();
    let mx = nalgebra::SymmetricEigen::new(p.c1().tr_mul(p.c1())).eigenvalues.min();
    let my = nalgebra::SymmetricEigen::new(p.c2().tr_mul(p.c2())).eigenvalues.min();
    let m = GrowthModuli::new(mx, my, GrowthCondition::Both).unwrap();
    let prm = derive_params(&p.smoothness(), &m, 1.0, 1.0, 1.0).unwrap();
    let (x0, y0) = zeros(&p);
    let stop = StopRule { max_iters: 10_000, rel_tol: 1e-10 };
    let opts = RunOptions { monitor: Some(&zs), ..Default::default() };
    let tr = run(&p, &Geometries::euclidean(), &Method::Gapd(prm), x0, y0, &stop, &opts).unwrap();
    assert!(tr.converged, "stopped at {} with {}", tr.iterations, tr.last().residual_rel);
    assert!(tr.last().dist_sq.unwrap() <= 1e-16);
    assert!(lyapunov_check(&tr, &prm).unwrap().max_violation <= 1e-9);
}

#[test]
fn zero_iterations_yield_only_the_initial_record() {
    let (p, _) = example1_fixture();
    let prm = GapdParams::manual(1.0, 0.9, 0.0, 0.1, 0.1).unwrap();
    let stop = StopRule { max_iters: 0, rel_tol: 1e-8 };
    let tr = run(&p, &Geometries::euclidean(), &Method::Gapd(prm), v(&[0.5, 0.5]), v(&[0.5, 0.5]), &stop, &RunOptions::default())
        .unwrap();
    assert_eq!(tr.records.len(), 1);
    assert_eq!(tr.records[0].k, 0);
    assert_eq!(tr.records[0].residual_rel, 1.0);
    assert_eq!(tr.iterations, 0);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let d = desk(2);
    let prm = derive_params(&d.p.smoothness(), &d.moduli, 0.5, 1.0, 1.0).unwrap();
    let stop = StopRule { max_iters: 500, rel_tol: 1e-8 };
    let opts = RunOptions { monitor: Some(&d.zs), timing: false, step_monitor: true, ..Default::default() };
    let go = || {
        let (x0, y0) = zeros(&d.p);
        run(&d.p, &Geometries::euclidean(), &Method::Gapd(prm), x0, y0, &stop, &opts).unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn trace_thinning_and_ordering() {
    let p = scsc(2, false);
    let prm = GapdParams::manual(1.0, 0.9, 0.0, 0.05, 0.05).unwrap();
    let stop = StopRule { max_iters: 345, rel_tol: 0.0 };
    let (x0, y0) = zeros(&p);
    let tr = run(&p, &Geometries::euclidean(), &Method::Gapd(prm), x0, y0, &stop, &RunOptions::default()).unwrap();
    let ks: Vec<usize> = tr.records.iter().map(|r| r.k).collect();
    assert!(ks.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(&ks[..101], &(0..=100).collect::<Vec<_>>()[..]);
    assert_eq!(ks[101], 110);
    assert_eq!(*ks.last().unwrap(), 345);
    assert_eq!(ks[ks.len() - 2], 340);
    assert!(tr.records.iter().all(|r| r.residual >= 0.0));
}

#[test]
fn divergence_guard_fires() {
    let p = bilinear_xy();
    // Plain GDA on a bilinear game spirals outward.
    let stop = StopRule { max_iters: 100_000, rel_tol: 1e-8 };
    let m = Method::Gda(GdaSteps::manual(0.5, 0.5).unwrap());
    let err = run(&p, &Geometries::euclidean(), &m, v(&[1.0]), v(&[1.0]), &stop, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::Diverged { .. }), "{err}");
}

#[test]
fn infeasible_start_is_rejected() {
    let (p, _) = example1_fixture();
    let prm = GapdParams::manual(1.0, 0.9, 0.0, 0.1, 0.1).unwrap();
    let r = run(&p, &Geometries::euclidean(), &Method::Gapd(prm), v(&[2.0, 0.0]), v(&[0.0, 0.0]), &StopRule::default(), &RunOptions::default());
    assert!(r.is_err());
}

#[test]
fn lyapunov_initial_record_and_negative_control() {
    let d = desk(1);
    let prm = derive_params(&d.p.smoothness(), &d.moduli, 1.0, 1.0, 1.0).unwrap();
    let stop = StopRule { max_iters: 2000, rel_tol: 0.0 };
    let opts = RunOptions { monitor: Some(&d.zs), ..Default::default() };
    let (x0, y0) = zeros(&d.p);
    let tr = run(&d.p, &Geometries::euclidean(), &Method::Gapd(prm), x0, y0, &stop, &opts).unwrap();
    let r0 = tr.records[0].lyapunov.unwrap();
    assert!(r0 <= tr.bregman_dist0.unwrap());
    let rep = lyapunov_check(&tr, &prm).unwrap();
    assert!(rep.max_violation <= 1e-9, "{rep:?}");
    assert_eq!(rep.checked, tr.records.len());
    // Claiming α = 0.9 is far faster than the run contracts.
    let bad = lyapunov_check_at_rate(&tr, 0.1).unwrap();
    assert!(bad.max_violation > 1e-3, "{bad:?}");

    let gda = Method::Gda(GdaSteps::manual(0.01, 0.01).unwrap());
    let (x0, y0) = zeros(&d.p);
    let tg = run(&d.p, &Geometries::euclidean(), &gda, x0, y0, &StopRule { max_iters: 10, rel_tol: 0.0 }, &opts).unwrap();
    assert!(matches!(lyapunov_check(&tg, &prm), Err(SolverError::MissingMonitor)));
}

#[test]
fn empirical_factor_recovers_a_known_rate() {
    let ks: Vec<usize> = (0..50).collect();
    let vals: Vec<f64> = ks.iter().map(|&k| 3.0 * 0.9f64.powi(k as i32)).collect();
    let f = empirical_factor(&ks, &vals, 0.0).unwrap();
    assert!((f - 0.9).abs() <= 1e-12);
    assert_eq!(empirical_factor(&ks[..1], &vals[..1], 0.0), None);
}

#[test]
fn stepsize_conditions_along_a_desk_run() {
    for theta in [1.0, 0.5, 0.0] {
        let d = desk(3);
        let moduli = if theta == 0.0 { d.moduli.with_condition(GrowthCondition::TwoSidedQgg) } else { d.moduli };
        let sm = d.p.smoothness();
        let prm = derive_params(&sm, &moduli, theta, 1.0, 1.0).unwrap();
        let stop = StopRule { max_iters: 3000, rel_tol: 1e-8 };
        let opts = RunOptions { monitor: Some(&d.zs), step_monitor: true, ..Default::default() };
        let (x0, y0) = zeros(&d.p);
        let tr = run(&d.p, &Geometries::euclidean(), &Method::Gapd(prm), x0, y0, &stop, &opts).unwrap();
        let rep = stepsize_condition_check(&prm, &sm, &moduli, Some(&tr)).unwrap();
        assert!(rep.passed, "θ = {theta}: {rep:?}");
        assert!(rep.cond_c_checked > 100);
        assert!(rep.cond_c_max_ratio.unwrap() <= COND_C_RTOL);
        assert!(rep.cond_a <= 1e-15);
    }
}

#[test]
fn step_monitor_needs_a_schedule() {
    let (p, zs) = example1_fixture();
    let prm = GapdParams::manual(1.0, 0.9, 0.0, 0.1, 0.1).unwrap();
    let opts = RunOptions { monitor: Some(&zs), step_monitor: true, ..Default::default() };
    let r = run(&p, &Geometries::euclidean(), &Method::Gapd(prm), v(&[0.5, 0.5]), v(&[0.5, 0.5]), &StopRule::default(), &opts);
    assert!(matches!(r, Err(SolverError::InvalidParams(_))));
}

// Reference iterations written directly from their textbook forms, with
// box projection by clamping.

fn clamp(set: &SimpleSet, x: DVector<f64>) -> DVector<f64> {
    match set.bounds() {
        Some((lo, hi)) => DVector::from_iterator(x.len(), (0..x.len()).map(|i| x[i].max(lo[i]).min(hi[i]))),
        None => x,
    }
}

/// Optimistic GDA: extrapolated gradients `g_k + c (g_k - g_{k-1})`.
fn ogda_reference(p: &dyn SaddleProblem, tau: f64, sigma: f64, cx: f64, cy: f64, x0: &DVector<f64>, y0: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let (mut gx_old, mut gy_old) = (p.grad_x(&x, &y), p.grad_y(&x, &y));
    let mut out = Vec::new();
    for _ in 0..n {
        let gx = p.grad_x(&x, &y);
        let gy = p.grad_y(&x, &y);
        let ex = &gx + (&gx - &gx_old) * cx;
        let ey = &gy + (&gy - &gy_old) * cy;
        let xn = clamp(p.set_x(), &x - ex * tau);
        let yn = clamp(p.set_y(), &y + ey * sigma);
        gx_old = gx;
        gy_old = gy;
        x = xn;
        y = yn;
        out.push(stack(&x, &y));
    }
    out
}

/// Accelerated primal-dual: dual ascent on the extrapolated partial
/// gradient, then a primal step at the new dual point.
fn apd_reference(p: &dyn SaddleProblem, tau: f64, sigma: f64, a: f64, x0: &DVector<f64>, y0: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let (mut xp, mut yp) = (x0.clone(), y0.clone());
    let mut out = Vec::new();
    for _ in 0..n {
        let ext = p.grad_y(&x, &y) * (1.0 + a) - p.grad_y(&xp, &yp) * a;
        let yn = clamp(p.set_y(), &y + ext * sigma);
        let xn = clamp(p.set_x(), &x - p.grad_x(&x, &yn) * tau);
        xp = x;
        yp = y;
        x = xn;
        y = yn;
        out.push(stack(&x, &y));
    }
    out
}

fn gapd_iterates(p: &dyn SaddleProblem, prm: &GapdParams, x0: &DVector<f64>, y0: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
    let mut st = IterateState::new(p, x0.clone(), y0.clone()).unwrap();
    (0..n)
        .map(|_| {
            st = gapd_step(p, &Geometries::euclidean(), prm, &st).unwrap();
            st.z()
        })
        .collect()
}

fn reference_problems() -> Vec<(Box<dyn SaddleProblem>, DVector<f64>, DVector<f64>)> {
    let (e1, _) = example1_fixture();
    vec![
        (Box::new(e1), v(&[0.7, 0.2]), v(&[0.4, 0.9])),
        (Box::new(scsc(11, false)), v(&[1.0, -1.0, 0.5]), v(&[0.3, 0.2])),
        (Box::new(scsc(12, true)), v(&[0.5, -0.5, 0.1]), v(&[-0.2, 0.4])),
    ]
}

#[test]
fn theta_zero_matches_optimistic_gda() {
    for (p, x0, y0) in reference_problems() {
        let (tau, sigma, alpha) = (0.08, 0.06, 0.9);
        let prm = GapdParams::manual(0.0, alpha, alpha, tau, sigma).unwrap();
        let ours = gapd_iterates(p.as_ref(), &prm, &x0, &y0, 100);
        let refs = ogda_reference(p.as_ref(), tau, sigma, alpha, alpha, &x0, &y0, 100);
        for (k, (a, b)) in ours.iter().zip(&refs).enumerate() {
            assert!((a - b).amax() <= 1e-12, "iterate {k}: {}", (a - b).amax());
        }
    }
}

#[test]
fn theta_one_beta_zero_matches_apd() {
    for (p, x0, y0) in reference_problems() {
        let (tau, sigma, alpha) = (0.08, 0.06, 0.95);
        let prm = GapdParams::manual(1.0, alpha, 0.0, tau, sigma).unwrap();
        let ours = gapd_iterates(p.as_ref(), &prm, &x0, &y0, 100);
        let refs = apd_reference(p.as_ref(), tau, sigma, alpha, &x0, &y0, 100);
        for (k, (a, b)) in ours.iter().zip(&refs).enumerate() {
            assert!((a - b).amax() <= 1e-12, "iterate {k}: {}", (a - b).amax());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn iterates_stay_feasible(seed in 0u64..1000, theta in 0.0f64..=1.0, step in 0.01f64..0.3, gda in any::<bool>()) {
        let (p, _) = example1_fixture();
        let mut r = sella::rng::stream(seed, 3);
        let x0 = sella::problems::checks::sample_in(p.set_x(), &mut r, &DVector::zeros(2), 1.0);
        let y0 = sella::problems::checks::sample_in(p.set_y(), &mut r, &DVector::zeros(2), 1.0);
        let method = if gda {
            Method::Gda(GdaSteps::manual(step, step).unwrap())
        } else {
            Method::Gapd(GapdParams::manual(theta, 0.9, 0.9 * (1.0 - theta), step, step).unwrap())
        };
        let stop = StopRule { max_iters: 200, rel_tol: 0.0 };
        let tr = run(&p, &Geometries::euclidean(), &method, x0.clone(), y0.clone(), &stop, &RunOptions { record: RecordPolicy::Every, ..Default::default() }).unwrap();
        let x = DVector::from_vec(tr.final_x.clone());
        let y = DVector::from_vec(tr.final_y.clone());
        prop_assert!(p.set_x().contains(&x, 1e-12) && p.set_y().contains(&y, 1e-12));
        // Re-run step by step and check every iterate.
        let mut st = IterateState::new(&p, x0, y0).unwrap();
        for _ in 0..50 {
            st = match &method {
                Method::Gapd(prm) => gapd_step(&p, &Geometries::euclidean(), prm, &st).unwrap(),
                Method::Gda(s) => gda_step(&p, &Geometries::euclidean(), s.step_x, s.step_y, &st).unwrap(),
            };
            prop_assert!(p.set_x().contains(&st.x, 1e-12) && p.set_y().contains(&st.y, 1e-12));
        }
    }
}
