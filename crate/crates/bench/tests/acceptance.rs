//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`;
//! set `SELLA_FULL=1` to include the full-size smoke run.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sella::geometry::{check_nonexpansive, distance, prox_step, Generator, ProxOptions, SimpleSet};
use sella::growth::*;
use sella::problems::checks::{convexity_violation, gradient_error, lipschitz_excess};
use sella::problems::*;
use sella::qp::Polyhedron;
use sella::solver::*;
use sella_bench::config::{ExperimentConfig, GdaStep, InstanceKind, MethodSpec};
use sella_bench::experiment::{run_experiment, RunFlags};

const DESK: [usize; 4] = [20, 16, 16, 12];
const COUPLING: f64 = 5.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct DeskInstance {
    p: StructuredProblem,
    zs: SolutionSet,
    moduli: GrowthModuli,
}

fn desk(seed: u64) -> DeskInstance {
    let [n, m, p, q] = DESK;
    let p = make_random_quadratic(n, m, p, q, seed, COUPLING).expect("desk instance");
    let zs = kkt_solution_set(&p.quad).expect("KKT oracle");
    let d = derive_moduli(&p, &zs, &HoffmanOptions::default(), true).expect("moduli");
    DeskInstance { p, zs, moduli: d.moduli }
}

fn origin(p: &dyn SaddleProblem) -> (DVector<f64>, DVector<f64>) {
    (DVector::zeros(p.dim_x()), DVector::zeros(p.dim_y()))
}

struct MonitoredRun {
    params: GapdParams,
    trace: ConvergenceTrace,
    secs: f64,
    steps: StepsizeReport,
}

/// θ = 1, QFG schedule, 10⁴ iterations with the contraction and step
/// monitors on.
fn monitored_runs() -> Vec<MonitoredRun> {
    (1..=5)
        .map(|seed| {
            let d = desk(seed);
            let moduli = d.moduli.with_condition(GrowthCondition::TwoSidedQfg);
            let sm = d.p.smoothness();
            let params = derive_params(&sm, &moduli, 1.0, 1.0, 1.0).expect("schedule");
            let stop = StopRule { max_iters: 10_000, rel_tol: 0.0 };
            let opts = RunOptions { monitor: Some(&d.zs), step_monitor: true, ..Default::default() };
            let (x0, y0) = origin(&d.p);
            let t = Instant::now();
            let trace = run(&d.p, &Geometries::euclidean(), &Method::Gapd(params), x0, y0, &stop, &opts).expect("run");
            let secs = t.elapsed().as_secs_f64();
            let steps = stepsize_condition_check(&params, &sm, &moduli, Some(&trace)).expect("report");
            MonitoredRun { params, trace, secs, steps }
        })
        .collect()
}

fn c1_contraction(runs: &[MonitoredRun]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slow: f64 = 0.0;
    for r in runs {
        worst = worst.max(lyapunov_check(&r.trace, &r.params).expect("monitor").max_violation);
        slow = slow.max(r.secs);
    }
    let iters = runs.iter().all(|r| r.trace.iterations == 10_000);
    outcome(
        worst <= 1e-9 && slow <= 10.0 && iters,
        format!("max relative violation {worst:.3e} (tol 1e-9), slowest seed {slow:.2} s (limit 10 s), 10^4 iterations each: {iters}"),
    )
}

fn c2_rate(runs: &[MonitoredRun]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let (ks, vals): (Vec<usize>, Vec<f64>) =
            r.trace.records.iter().filter_map(|t| t.lyapunov.map(|l| (t.k, l))).unzip();
        let f = empirical_factor(&ks, &vals, 1e-20);
        let pass = f.is_some_and(|f| f < 1.0 && f <= r.params.alpha + 0.02);
        ok &= pass;
        parts.push(format!("{:.4}/{:.6}", f.unwrap_or(f64::NAN), r.params.alpha));
    }
    outcome(ok, format!("empirical factor / alpha per seed: {} (need factor <= alpha + 0.02, < 1)", parts.join(", ")))
}

fn c3_ordering() -> Outcome {
    let cfg = ExperimentConfig {
        dims: vec![DESK],
        seeds: vec![1, 2, 3],
        methods: vec![
            MethodSpec::Gda(GdaStep::Rule(GdaStepRule::Heuristic)),
            MethodSpec::Gapd { thetas: vec![0.0, 0.5, 0.99, 1.0] },
        ],
        coupling_std: COUPLING,
        instance: InstanceKind::Random,
        max_iters: 100_000,
        rel_tol: 1e-8,
        monitors: false,
        growth_condition: GrowthCondition::Both,
        output: None,
    };
    let t = Instant::now();
    let res = run_experiment(&cfg, &RunFlags { full: false, timing: false });
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs <= 60.0;
    // For context only: GDA with the growth-based step μ/L_F².
    let theory = ExperimentConfig { methods: vec![MethodSpec::Gda(GdaStep::Rule(GdaStepRule::Theory))], ..cfg.clone() };
    let th = run_experiment(&theory, &RunFlags { full: false, timing: false });
    let th_conv = th.summary.cells.iter().filter(|c| c.converged).count();
    let mut parts = Vec::new();
    for seed in 1..=3 {
        let its = |m: &str, th: Option<f64>| {
            res.summary
                .cells
                .iter()
                .find(|c| c.seed == seed && c.method == m && c.theta == th)
                .and_then(|c| c.iterations_to_tol)
        };
        let gda = its("gda", None);
        let mut line = format!("seed {seed}: gda {}", gda.map_or("-".into(), |i| i.to_string()));
        for th in [0.0, 0.5, 0.99, 1.0] {
            let g = its("gapd", Some(th));
            ok &= match (g, gda) {
                (Some(g), Some(d)) => g < d,
                (Some(_), None) => true,
                _ => false,
            };
            line += &format!(" gapd({th}) {}", g.map_or("-".into(), |i| i.to_string()));
        }
        parts.push(line);
    }
    outcome(
        ok,
        format!(
            "iterations to 1e-8 (GDA step 1/(2L)): {}; {secs:.1} s (limit 60 s); GDA with step mu/L_F^2 converged on {th_conv}/3 within 10^5",
            parts.join("; ")
        ),
    )
}

fn c4_certification() -> Outcome {
    let mut ok = true;
    let mut worst_q = f64::INFINITY;
    let mut worst_f = f64::INFINITY;
    let mut certified = 0;
    let mut min_mu = f64::INFINITY;
    for seed in 1..=10 {
        let d = desk(seed);
        let o = CertOptions { samples: 500, seed, tol: 1e-8, ..Default::default() };
        let q = certify_qgg(&d.p, &d.zs, &d.moduli, &o).expect("qgg");
        let f = certify_qfg(&d.p, &d.zs, &d.moduli, &o).expect("qfg");
        ok &= d.moduli.mu_x > 0.0 && d.moduli.mu_y > 0.0 && q.passed && f.passed;
        worst_q = worst_q.min(q.min_scaled_margin);
        worst_f = worst_f.min(f.min_scaled_margin);
        min_mu = min_mu.min(d.moduli.mu_x.min(d.moduli.mu_y));
        certified += d.moduli.certified as usize;
    }
    outcome(
        ok,
        format!(
            "10 instances, min mu {min_mu:.3e}; min scaled margin qgg {worst_q:.3e}, qfg {worst_f:.3e} (tol -1e-8); xi certified on {certified}/10"
        ),
    )
}

fn c5_example1() -> Outcome {
    let (p, zs) = example1_fixture();
    let m = GrowthModuli::new(1.0, 1.0, GrowthCondition::TwoSidedQfg).expect("moduli");
    let f = certify_qfg(&p, &zs, &m, &CertOptions { samples: 500, seed: 1, ..Default::default() }).expect("qfg");
    let forced = DVector::from_row_slice(&[0.0, 0.0, 0.0, 0.5]);
    let mut violated = Vec::new();
    for mu in [1e-3, 1.0, 10.0] {
        let m = GrowthModuli::new(mu, mu, GrowthCondition::TwoSidedQgg).expect("moduli");
        let o = CertOptions { samples: 0, forced: vec![forced.clone()], ..Default::default() };
        let q = certify_qgg(&p, &zs, &m, &o).expect("qgg");
        violated.push(!q.passed);
    }
    outcome(
        f.passed && violated.iter().all(|&v| v),
        format!("qfg(1,1) over 500 samples passed: {}, min margin {:.3e}; qgg violated at ((0,0),(0,0.5)) for mu 1e-3/1/10: {violated:?}", f.passed, f.min_margin),
    )
}

fn c6_example2() -> Outcome {
    let e = example2_fixture(3.0).expect("fixture");
    let mut worst: f64 = 0.0;
    for x in [0.25, 0.5, 1.0, 2.0, 3.0] {
        let lhs = e.h_prime(x).expect("h'") * x;
        let rhs = e.bregman_to_min(x).expect("D");
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    let ratio = |x: f64| (e.h(x).unwrap() - e.h(0.0).unwrap()) / e.bregman_to_min(x).unwrap();
    let (r1, r3) = (ratio(1.0), ratio(3.0));
    outcome(
        worst <= 1e-9 && r3 < r1,
        format!("identity error {worst:.3e} (tol 1e-9, relative above 1); ratio at 1 = {r1:.6}, at 3 = {r3:.6}"),
    )
}

fn c7_hoffman() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut worst_ineq = f64::NEG_INFINITY;
    for s in 0..20u64 {
        let mut r = sella::rng::stream(500 + s, 0);
        let rows = 1 + (s as usize % 6);
        let cols = rows + (s as usize % 4);
        let a = sella::rng::gaussian_matrix(&mut r, rows, cols, 1.0);
        let opts = HoffmanOptions { method: Some(HoffmanMethod::KlatteEnumeration), ..Default::default() };
        let k = hoffman_constant(&a, &DMatrix::zeros(0, cols), &opts).expect("klatte");
        let smin = SymmetricEigen::new(&a * a.transpose()).eigenvalues.min().sqrt();
        worst_rel = worst_rel.max((k.theta * smin - 1.0).abs());
        let x0 = sella::rng::gaussian_vector(&mut r, cols, 1.0);
        let poly = Polyhedron { eq_a: a.clone(), eq_b: &a * &x0, ineq_a: DMatrix::zeros(0, cols), ineq_b: DVector::zeros(0) };
        for _ in 0..1000 {
            let x = sella::rng::gaussian_vector(&mut r, cols, 3.0);
            let px = poly.project(&x).expect("projection").point;
            let res = (&a * &x - &poly.eq_b).norm();
            let excess = (&x - &px).norm() - k.theta * res;
            worst_ineq = worst_ineq.max(excess / (1.0 + k.theta * res));
        }
    }
    outcome(
        worst_rel <= 1e-8 && worst_ineq <= 1e-9,
        format!("max |theta*sigma_min - 1| {worst_rel:.3e} (tol 1e-8); max Hoffman excess {worst_ineq:.3e} over 20x1000 points"),
    )
}

fn clamp(set: &SimpleSet, x: DVector<f64>) -> DVector<f64> {
    match set.bounds() {
        Some((lo, hi)) => DVector::from_iterator(x.len(), (0..x.len()).map(|i| x[i].max(lo[i]).min(hi[i]))),
        None => x,
    }
}

fn c8_special_cases() -> Outcome {
    let (e1, _) = example1_fixture();
    let boxed = {
        let d = make_random_quadratic(5, 4, 5, 4, 3, 1.0).expect("instance");
        let q = d.quad;
        QuadraticSaddle::new(
            q.c1,
            q.c2,
            q.a,
            q.lin_x,
            q.lin_y,
            0.0,
            SimpleSet::boxed(DVector::from_element(5, -0.3), DVector::from_element(5, 0.3)).unwrap(),
            SimpleSet::boxed(DVector::from_element(4, -0.3), DVector::from_element(4, 0.3)).unwrap(),
        )
        .expect("boxed")
    };
    let free = make_random_quadratic(6, 5, 6, 5, 4, 1.0).expect("instance").quad;
    let problems: Vec<&dyn SaddleProblem> = vec![&e1, &boxed, &free];
    let alpha = 0.9;
    let mut worst_ogda: f64 = 0.0;
    let mut worst_apd: f64 = 0.0;
    for p in problems {
        let x0 = clamp(p.set_x(), DVector::from_element(p.dim_x(), 0.2));
        let y0 = clamp(p.set_y(), DVector::from_element(p.dim_y(), 0.1));
        let geo = Geometries::euclidean();
        // Steps well inside the stable range so that both iterations stay bounded.
        let sm = p.smoothness();
        let l = sm.l_xx.max(sm.l_yy) + sm.l_xy.max(sm.l_yx);
        let (tau, sigma) = (0.2 / l, 0.15 / l);

        // Optimistic GDA with extrapolation weight α on both blocks.
        let prm = GapdParams::manual(0.0, alpha, alpha, tau, sigma).unwrap();
        let mut st = IterateState::new(p, x0.clone(), y0.clone()).unwrap();
        let (mut x, mut y) = (x0.clone(), y0.clone());
        let (mut gxo, mut gyo) = (p.grad_x(&x, &y), p.grad_y(&x, &y));
        for _ in 0..100 {
            st = gapd_step(p, &geo, &prm, &st).unwrap();
            let (gx, gy) = (p.grad_x(&x, &y), p.grad_y(&x, &y));
            let xn = clamp(p.set_x(), &x - (&gx * (1.0 + alpha) - &gxo * alpha) * tau);
            let yn = clamp(p.set_y(), &y + (&gy * (1.0 + alpha) - &gyo * alpha) * sigma);
            (gxo, gyo, x, y) = (gx, gy, xn, yn);
            worst_ogda = worst_ogda.max((&st.x - &x).amax()).max((&st.y - &y).amax());
        }

        // APD: extrapolated dual ascent, then a primal step at the new dual point.
        let prm = GapdParams::manual(1.0, alpha, 0.0, tau, sigma).unwrap();
        let mut st = IterateState::new(p, x0.clone(), y0.clone()).unwrap();
        let (mut x, mut y, mut xp, mut yp) = (x0.clone(), y0.clone(), x0.clone(), y0.clone());
        for _ in 0..100 {
            st = gapd_step(p, &geo, &prm, &st).unwrap();
            let yn = clamp(p.set_y(), &y + (p.grad_y(&x, &y) * (1.0 + alpha) - p.grad_y(&xp, &yp) * alpha) * sigma);
            let xn = clamp(p.set_x(), &x - p.grad_x(&x, &yn) * tau);
            (xp, yp, x, y) = (x, y, xn, yn);
            worst_apd = worst_apd.max((&st.x - &x).amax()).max((&st.y - &y).amax());
        }
    }
    outcome(
        worst_ogda <= 1e-12 && worst_apd <= 1e-12,
        format!("max iterate gap over 3 problems x 100 iterations: OGDA {worst_ogda:.3e}, APD {worst_apd:.3e} (tol 1e-12)"),
    )
}

fn c9_properties(runs: &[MonitoredRun]) -> Outcome {
    let mut r = sella::rng::stream(900, 0);
    let unit = |n| (DVector::zeros(n), DVector::from_element(n, 1.0));
    let gens = [
        (Generator::Euclidean, SimpleSet::unit_box(3), 1e-12),
        (Generator::diag_quadratic(DVector::from_row_slice(&[1.0, 2.5, 4.0])).unwrap(), SimpleSet::unit_box(3), 1e-12),
        (Generator::exp_quadratic(0.0, 1.5).unwrap(), SimpleSet::boxed(DVector::zeros(3), DVector::from_element(3, 1.5)).unwrap(), 1e-10),
    ];
    // Three-point inequality of the prox step.
    let mut tp_viol = 0;
    for i in 0..1000 {
        let (g, set, tol) = &gens[i % 3];
        let (lo, hi) = set.bounds().unwrap();
        let lin = sella::rng::gaussian_vector(&mut r, 3, 5.0);
        let anchor = sella::rng::uniform_vector(&mut r, &lo, &hi);
        let x = sella::rng::uniform_vector(&mut r, &lo, &hi);
        let t = 0.1 + 10.0 * sella::rng::uniform_vector(&mut r, &unit(1).0, &unit(1).1)[0];
        let xp = prox_step(g, set, &lin, t, &anchor, &ProxOptions::default()).unwrap();
        let lhs = lin.dot(&x) + t * distance(g, &x, &anchor).unwrap();
        let rhs = lin.dot(&xp) + t * distance(g, &xp, &anchor).unwrap() + t * distance(g, &x, &xp).unwrap();
        tp_viol += ((lhs - rhs) / (1.0 + lhs.abs() + rhs.abs()) < -tol) as usize;
    }
    // Projection ratios within L_ψ, and D >= ½‖·‖².
    let mut ne_viol = 0;
    let mut lb_viol = 0;
    for (g, set, _) in &gens {
        let (lo, hi) = set.bounds().unwrap();
        // Project onto an inner box from points spread over the generator's
        // domain (or a box twice as wide when the domain is unrestricted).
        let w = &hi - &lo;
        let inner = SimpleSet::boxed(&lo + &w * 0.2, &hi - &w * 0.2).unwrap();
        let (s_lo, s_hi) = match g.domain() {
            Some(_) => (lo.clone(), hi.clone()),
            None => (&lo - &w * 0.5, &hi + &w * 0.5),
        };
        let pairs: Vec<_> = (0..200)
            .map(|_| (sella::rng::uniform_vector(&mut r, &s_lo, &s_hi), sella::rng::uniform_vector(&mut r, &s_lo, &s_hi)))
            .collect();
        let ratio = check_nonexpansive(g, &inner, &pairs).unwrap();
        ne_viol += (ratio > g.lipschitz() * (1.0 + 1e-12)) as usize;
        let dom = g.domain().map_or((lo.clone(), hi.clone()), |(a, b)| (DVector::from_element(3, a), DVector::from_element(3, b)));
        for _ in 0..300 {
            let a = sella::rng::uniform_vector(&mut r, &dom.0, &dom.1);
            let b = sella::rng::uniform_vector(&mut r, &dom.0, &dom.1);
            let half = 0.5 * (&a - &b).norm_squared();
            lb_viol += (distance(g, &a, &b).unwrap() < half * (1.0 - 1e-12) - 1e-15) as usize;
        }
    }
    // Smoothness, gradient and convexity certificates.
    let (e1, _) = example1_fixture();
    let d = desk(1);
    let adm = make_admissible_quadratic(10, 8, 6, 5, 1, 3.0).unwrap();
    let probs: Vec<&dyn SaddleProblem> = vec![&e1, &d.p, &adm];
    let mut a1_viol = 0;
    for (i, p) in probs.into_iter().enumerate() {
        let s = 40 + i as u64;
        a1_viol += (gradient_error(p, 50, s, 1.0) > 1e-6) as usize;
        a1_viol += (lipschitz_excess(p, 200, s, 2.0) > 1e-10) as usize;
        a1_viol += (convexity_violation(p, 100, s, 2.0) > 1e-12) as usize;
    }
    // Step-size conditions along the monitored runs.
    let step_viol = runs.iter().filter(|m| !m.steps.passed).count();
    let worst_c = runs.iter().filter_map(|m| m.steps.cond_c_max_ratio).fold(f64::NEG_INFINITY, f64::max);
    let judged: usize = runs.iter().map(|m| m.steps.cond_c_checked).sum();
    let total = tp_viol + ne_viol + lb_viol + a1_viol + step_viol;
    outcome(
        total == 0,
        format!(
            "violations: three-point {tp_viol}/1000, projection ratio {ne_viol}/3, lower bound {lb_viol}/900, smoothness/convexity {a1_viol}/9, step conditions {step_viol}/5 (worst condition (c) ratio {worst_c:.3e} over {judged} steps, tol 1e-9)"
        ),
    )
}

fn c10_large_scale() -> Option<Outcome> {
    if std::env::var("SELLA_FULL").ok().as_deref() != Some("1") {
        return None;
    }
    let cfg = ExperimentConfig {
        dims: vec![[75, 60, 60, 50]],
        seeds: vec![1],
        methods: vec![
            MethodSpec::Gda(GdaStep::Rule(GdaStepRule::Heuristic)),
            MethodSpec::Gapd { thetas: vec![0.0, 0.5, 0.99, 1.0] },
        ],
        coupling_std: COUPLING,
        instance: InstanceKind::Random,
        max_iters: 100_000,
        rel_tol: 1e-8,
        monitors: false,
        growth_condition: GrowthCondition::Both,
        output: None,
    };
    let t = Instant::now();
    let res = run_experiment(&cfg, &RunFlags { full: true, timing: false });
    let parts: Vec<String> = res
        .summary
        .cells
        .iter()
        .map(|c| format!("{}{} {}", c.method, c.theta.map_or(String::new(), |t| format!("({t})")), c.iterations_to_tol.map_or("-".into(), |i| i.to_string())))
        .collect();
    let ok = !res.summary.cells.is_empty() && res.summary.cells.iter().all(|c| c.converged);
    Some(outcome(ok, format!("(75,60,60,50) iterations to 1e-8: {}; {:.1} s", parts.join(", "), t.elapsed().as_secs_f64())))
}

fn main() {
    let runs = monitored_runs();
    let mut results: Vec<(u32, &str, Option<Outcome>)> = vec![
        (1, "contraction monitor on desk runs", Some(c1_contraction(&runs))),
        (2, "linear rate of the Lyapunov value", Some(c2_rate(&runs))),
        (3, "GAPD variants reach 1e-8 before GDA", Some(c3_ordering())),
        (4, "structured moduli certify on random instances", Some(c4_certification())),
        (5, "Example 1 growth claims", Some(c5_example1())),
        (6, "Example 2 identity and decay", Some(c6_example2())),
        (7, "Hoffman constants", Some(c7_hoffman())),
        (8, "OGDA and APD special cases", Some(c8_special_cases())),
        (9, "property suites", Some(c9_properties(&runs))),
    ];
    results.push((10, "full-size smoke run", c10_large_scale()));
    let mut failed = 0;
    for (id, name, o) in &results {
        match o {
            Some(o) => {
                failed += !o.passed as usize;
                println!("[{}] {id:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
            }
            None => println!("[SKIP] {id:>2} {name}: set SELLA_FULL=1 to run"),
        }
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
