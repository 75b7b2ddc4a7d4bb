use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sella::growth::{derive_moduli, GrowthModuli, HoffmanOptions};
use sella::problems::{
    kkt_solution_set, make_admissible_quadratic, make_random_quadratic, SaddleProblem, SolutionSet, StructuredProblem,
};
use sella::solver::{
    derive_params, empirical_factor, gda_steps, lyapunov_check, run, ConvergenceTrace, GdaStepRule, GdaSteps, Geometries, Method,
    RunOptions, StopRule,
};
use sella::DVector;

use crate::config::{ExperimentConfig, GdaStep, InstanceKind, MethodSpec};

/// Instances with `n + m` above this are skipped unless the full run is
/// requested.
pub const DESK_LIMIT: usize = 64;
/// No KKT oracle (and hence no moduli or monitors) above this `n + m`.
pub const ORACLE_LIMIT: usize = 4096;
/// Values below this fraction of the first are ignored in rate fits.
const FIT_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub theta: Option<f64>,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub residual_rel: f64,
    pub dist_sq: Option<f64>,
    pub lyapunov: Option<f64>,
    pub elapsed_ns: u64,
}

impl ResultRow {
    fn key(&self) -> (&str, u64, u64, [usize; 4], usize) {
        // θ sorts as its bit pattern (nonnegative floats order like their
        // bits), with GDA's missing θ first.
        let t = self.theta.map_or(0, |t| t.to_bits() + 1);
        (&self.method, t, self.seed, [self.n, self.m, self.p, self.q], self.k)
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub theta: Option<f64>,
    pub seed: u64,
    pub dims: [usize; 4],
    pub error: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub iterations_to_tol: Option<usize>,
    pub final_residual_rel: Option<f64>,
    /// GAPD schedule rate.
    pub alpha: Option<f64>,
    pub step: Option<f64>,
    pub residual_factor: Option<f64>,
    pub lyapunov_factor: Option<f64>,
    pub lyapunov_violation: Option<f64>,
    pub mu: Option<(f64, f64)>,
    pub moduli_certified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: String,
    pub theta: Option<f64>,
    pub cells: usize,
    pub failed: usize,
    pub converged: usize,
    pub mean_iterations_to_tol: Option<f64>,
    pub max_iterations_to_tol: Option<usize>,
    pub mean_residual_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rel_tol: f64,
    pub max_iters: usize,
    pub cells: Vec<CellSummary>,
    pub aggregates: Vec<MethodAggregate>,
    pub skipped_dims: Vec<[usize; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunFlags {
    /// Include instances above [`DESK_LIMIT`].
    pub full: bool,
    pub timing: bool,
}

impl Default for RunFlags {
    fn default() -> Self {
        Self { full: false, timing: true }
    }
}

struct Instance {
    dims: [usize; 4],
    seed: u64,
    problem: StructuredProblem,
    zstar: Option<SolutionSet>,
    /// Moduli, whether ξ could be certified, or the reason there are none.
    moduli: Result<GrowthModuli, String>,
}

fn build_instance(cfg: &ExperimentConfig, dims: [usize; 4], seed: u64) -> Result<Instance, String> {
    let [n, m, p, q] = dims;
    let problem = match cfg.instance {
        InstanceKind::Random => make_random_quadratic(n, m, p, q, seed, cfg.coupling_std),
        InstanceKind::Admissible => make_admissible_quadratic(n, m, p, q, seed, cfg.coupling_std),
    }
    .map_err(|e| e.to_string())?;
    if n + m > ORACLE_LIMIT {
        return Ok(Instance { dims, seed, problem, zstar: None, moduli: Err("no KKT oracle at this size".into()) });
    }
    let zstar = kkt_solution_set(&problem.quad).map_err(|e| format!("KKT oracle: {e}"))?;
    let moduli = derive_moduli(&problem, &zstar, &HoffmanOptions::default(), true)
        .map(|d| d.moduli.with_condition(cfg.growth_condition))
        .map_err(|e| format!("growth moduli: {e}"));
    Ok(Instance { dims, seed, problem, zstar: Some(zstar), moduli })
}

#[derive(Debug, Clone, Copy)]
enum Variant {
    Gda(GdaStep),
    Gapd(f64),
}

impl Variant {
    fn name(&self) -> &'static str {
        match self {
            Variant::Gda(_) => "gda",
            Variant::Gapd(_) => "gapd",
        }
    }
    fn theta(&self) -> Option<f64> {
        match self {
            Variant::Gapd(t) => Some(*t),
            Variant::Gda(_) => None,
        }
    }
}

fn variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for m in &cfg.methods {
        match m {
            MethodSpec::Gda(s) => out.push(Variant::Gda(*s)),
            MethodSpec::Gapd { thetas } => out.extend(thetas.iter().map(|&t| Variant::Gapd(t))),
        }
    }
    out
}

fn blank_cell(v: &Variant, seed: u64, dims: [usize; 4], moduli: Option<&GrowthModuli>, error: Option<String>) -> CellSummary {
    CellSummary {
        method: v.name().into(),
        theta: v.theta(),
        seed,
        dims,
        error,
        iterations: 0,
        converged: false,
        iterations_to_tol: None,
        final_residual_rel: None,
        alpha: None,
        step: None,
        residual_factor: None,
        lyapunov_factor: None,
        lyapunov_violation: None,
        mu: moduli.map(|m| (m.mu_x, m.mu_y)),
        moduli_certified: moduli.map(|m| m.certified),
    }
}

fn empty_cell(inst: &Instance, v: &Variant, error: String) -> CellSummary {
    blank_cell(v, inst.seed, inst.dims, inst.moduli.as_ref().ok(), Some(error))
}

fn factor_of(tr: &ConvergenceTrace, pick: impl Fn(&sella::solver::TraceRecord) -> Option<f64>) -> Option<f64> {
    let (ks, vals): (Vec<usize>, Vec<f64>) = tr.records.iter().filter_map(|r| pick(r).map(|v| (r.k, v))).unzip();
    empirical_factor(&ks, &vals, FIT_FLOOR)
}

fn run_cell(cfg: &ExperimentConfig, flags: &RunFlags, inst: &Instance, v: &Variant) -> (CellSummary, Vec<ResultRow>) {
    let p = &inst.problem;
    let sm = p.smoothness();
    let moduli = inst.moduli.as_ref();
    let (method, alpha, step) = match v {
        Variant::Gapd(theta) => {
            let Ok(m) = moduli else {
                return (empty_cell(inst, v, moduli.unwrap_err().clone()), Vec::new());
            };
            match derive_params(&sm, m, *theta, 1.0, 1.0) {
                Ok(prm) => (Method::Gapd(prm), Some(prm.alpha), None),
                Err(e) => return (empty_cell(inst, v, format!("derive_params: {e}")), Vec::new()),
            }
        }
        Variant::Gda(GdaStep::Fixed(h)) => match GdaSteps::manual(*h, *h) {
            Ok(s) => (Method::Gda(s), None, Some(*h)),
            Err(e) => return (empty_cell(inst, v, e.to_string()), Vec::new()),
        },
        Variant::Gda(GdaStep::Rule(rule)) => {
            let m = match (rule, moduli) {
                (_, Ok(m)) => *m,
                // The heuristic step only reads the smoothness constants.
                (GdaStepRule::Heuristic, Err(_)) => GrowthModuli::new(1.0, 1.0, cfg.growth_condition).expect("unit moduli"),
                (GdaStepRule::Theory, Err(e)) => return (empty_cell(inst, v, e.clone()), Vec::new()),
            };
            match gda_steps(&sm, &m, *rule) {
                Ok(s) => (Method::Gda(s), None, Some(s.step_x)),
                Err(e) => return (empty_cell(inst, v, e.to_string()), Vec::new()),
            }
        }
    };
    let x0 = p.quad.set_x.project_euclidean(&DVector::zeros(p.dim_x()));
    let y0 = p.quad.set_y.project_euclidean(&DVector::zeros(p.dim_y()));
    let (x0, y0) = match (x0, y0) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return (empty_cell(inst, v, e.to_string()), Vec::new()),
    };
    let stop = StopRule { max_iters: cfg.max_iters, rel_tol: cfg.rel_tol };
    let opts = RunOptions {
        monitor: if cfg.monitors { inst.zstar.as_ref() } else { None },
        timing: flags.timing,
        ..Default::default()
    };
    let tr = match run(p, &Geometries::euclidean(), &method, x0, y0, &stop, &opts) {
        Ok(t) => t,
        Err(e) => return (empty_cell(inst, v, format!("run: {e}")), Vec::new()),
    };
    let [n, m, pp, q] = inst.dims;
    let rows = tr
        .records
        .iter()
        .map(|r| ResultRow {
            method: v.name().into(),
            theta: v.theta(),
            seed: inst.seed,
            n,
            m,
            p: pp,
            q,
            k: r.k,
            residual_rel: r.residual_rel,
            dist_sq: r.dist_sq,
            lyapunov: r.lyapunov,
            elapsed_ns: r.elapsed_ns,
        })
        .collect();
    let lyapunov_violation = match &method {
        Method::Gapd(prm) if opts.monitor.is_some() => lyapunov_check(&tr, prm).ok().map(|r| r.max_violation),
        _ => None,
    };
    let mut cell = blank_cell(v, inst.seed, inst.dims, moduli.ok(), None);
    cell.iterations = tr.iterations;
    cell.converged = tr.converged;
    cell.iterations_to_tol = tr.iterations_to(cfg.rel_tol);
    cell.final_residual_rel = Some(tr.last().residual_rel);
    cell.alpha = alpha;
    cell.step = step;
    cell.residual_factor = factor_of(&tr, |r| Some(r.residual_rel));
    cell.lyapunov_factor = factor_of(&tr, |r| r.lyapunov);
    cell.lyapunov_violation = lyapunov_violation;
    (cell, rows)
}

fn aggregate(cells: &[CellSummary]) -> Vec<MethodAggregate> {
    let mut keys: Vec<(String, Option<f64>)> = Vec::new();
    for c in cells {
        let k = (c.method.clone(), c.theta);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, theta)| {
            let mine: Vec<&CellSummary> = cells.iter().filter(|c| c.method == method && c.theta == theta).collect();
            let its: Vec<usize> = mine.iter().filter_map(|c| c.iterations_to_tol).collect();
            let facs: Vec<f64> = mine.iter().filter_map(|c| c.residual_factor).collect();
            let mean = |v: &[f64]| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
            MethodAggregate {
                cells: mine.len(),
                failed: mine.iter().filter(|c| c.error.is_some()).count(),
                converged: mine.iter().filter(|c| c.converged).count(),
                mean_iterations_to_tol: mean(&its.iter().map(|&i| i as f64).collect::<Vec<_>>()),
                max_iterations_to_tol: its.iter().max().copied(),
                mean_residual_factor: mean(&facs),
                method,
                theta,
            }
        })
        .collect()
}

/// Thread count from `SELLA_THREADS`; unset, unparsable or 0 means automatic.
pub fn thread_count() -> usize {
    std::env::var("SELLA_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// Build every instance, derive moduli and schedules, and run all methods.
/// A failing cell is recorded in the summary and does not stop its siblings.
pub fn run_experiment(cfg: &ExperimentConfig, flags: &RunFlags) -> ExperimentOutput {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build().expect("thread pool");
    pool.install(|| run_inner(cfg, flags))
}

fn run_inner(cfg: &ExperimentConfig, flags: &RunFlags) -> ExperimentOutput {
    let (dims, skipped_dims): (Vec<[usize; 4]>, Vec<[usize; 4]>) =
        cfg.dims.iter().partition(|d| flags.full || d[0] + d[1] <= DESK_LIMIT);
    let jobs: Vec<([usize; 4], u64)> = dims.iter().flat_map(|&d| cfg.seeds.iter().map(move |&s| (d, s))).collect();
    let instances: Vec<Result<Instance, (([usize; 4], u64), String)>> =
        jobs.par_iter().map(|&(d, s)| build_instance(cfg, d, s).map_err(|e| ((d, s), e))).collect();
    let vars = variants(cfg);

    let mut cells = Vec::new();
    let mut rows = Vec::new();
    let mut work = Vec::new();
    for inst in &instances {
        match inst {
            Ok(i) => work.extend(vars.iter().map(move |v| (i, v))),
            Err(((d, s), e)) => {
                cells.extend(vars.iter().map(|v| blank_cell(v, *s, *d, None, Some(e.clone()))));
            }
        }
    }
    let done: Vec<(CellSummary, Vec<ResultRow>)> = work.par_iter().map(|(i, v)| run_cell(cfg, flags, i, v)).collect();
    for (c, r) in done {
        cells.push(c);
        rows.extend(r);
    }
    sort_rows(&mut rows);
    cells.sort_by(|a, b| {
        let ka = (a.method.as_str(), a.theta.map_or(0, |t| t.to_bits() + 1), a.seed, a.dims);
        let kb = (b.method.as_str(), b.theta.map_or(0, |t| t.to_bits() + 1), b.seed, b.dims);
        ka.cmp(&kb)
    });
    let aggregates = aggregate(&cells);
    ExperimentOutput {
        rows,
        summary: Summary { rel_tol: cfg.rel_tol, max_iters: cfg.max_iters, cells, aggregates, skipped_dims },
    }
}
