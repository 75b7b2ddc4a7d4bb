use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sella::growth::{certify_qfg, certify_qgg, derive_moduli, CertOptions, GrowthCondition, GrowthModuli, HoffmanOptions};
use sella::problems::io::{self, AnyProblem, ProblemFile};
use sella::problems::{kkt_solution_set, SaddleProblem, SolutionSet};
use sella::solver::{
    derive_params, gda_steps, run, stepsize_condition_check, GdaStepRule, Geometries, Method, RunOptions, StopRule,
};
use sella::DVector;

use crate::config::parse_config;
use crate::emit::{emit_csv, emit_summary_json};
use crate::experiment::{run_experiment, RunFlags};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "sella", version, about = "Saddle-point solvers, growth certification and benchmarks")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Condition {
    Qfg,
    Qgg,
    Both,
}

impl From<Condition> for GrowthCondition {
    fn from(c: Condition) -> Self {
        match c {
            Condition::Qfg => GrowthCondition::TwoSidedQfg,
            Condition::Qgg => GrowthCondition::TwoSidedQgg,
            Condition::Both => GrowthCondition::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodName {
    Gapd,
    Gda,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run an experiment config and write results.csv and summary.json.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include instances too large for a quick desk run.
        #[arg(long)]
        full: bool,
    },
    /// Sample a growth condition and print the certification report.
    Certify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum)]
        condition: Condition,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON array of extra points, each a stacked z or {"x": [..], "y": [..]}.
        #[arg(long)]
        forced: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Solve a problem and print the tail of the trace.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "gapd")]
        method: MethodName,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, value_enum, default_value = "both")]
        condition: Condition,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
        #[arg(long, default_value_t = 10)]
        tail: usize,
    },
    /// Print the derived GAPD schedule with its verification report.
    Params {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long, value_enum)]
        condition: Condition,
    },
}

/// Failure with the exit code it maps to.
struct Fail(i32, String);

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

fn numeric(msg: impl std::fmt::Display) -> Fail {
    Fail(EXIT_NUMERIC, msg.to_string())
}

fn load_problem(path: &Path) -> Result<ProblemFile, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    io::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn solution_set(pf: &ProblemFile) -> Result<SolutionSet, Fail> {
    kkt_solution_set(pf.problem.quadratic()).map_err(numeric)
}

/// Moduli stored with the problem, else derived for a structured problem.
fn moduli_for(pf: &ProblemFile, zs: &SolutionSet, cond: GrowthCondition) -> Result<GrowthModuli, Fail> {
    if let Some(h) = &pf.moduli {
        return GrowthModuli::new(h.mu_x, h.mu_y, cond).map_err(numeric);
    }
    match &pf.problem {
        AnyProblem::Structured(s) => derive_moduli(s, zs, &HoffmanOptions::default(), true)
            .map(|d| d.moduli.with_condition(cond))
            .map_err(numeric),
        AnyProblem::Quadratic(_) => Err(numeric("problem file has no moduli and is not a structured instance")),
    }
}

fn forced_points(path: &Path, dim_x: usize, dim_y: usize) -> Result<Vec<DVector<f64>>, Fail> {
    let bad = |m: String| usage(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let arr = v.as_array().ok_or_else(|| bad("expected an array of points".into()))?;
    let nums = |v: &Value, what: &str| -> Result<Vec<f64>, Fail> {
        v.as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .ok_or_else(|| bad(format!("{what} must be an array of numbers")))
    };
    let mut out = Vec::new();
    for (i, p) in arr.iter().enumerate() {
        let z = match p {
            Value::Object(o) => {
                let x = nums(o.get("x").unwrap_or(&Value::Null), &format!("[{i}].x"))?;
                let y = nums(o.get("y").unwrap_or(&Value::Null), &format!("[{i}].y"))?;
                [x, y].concat()
            }
            _ => nums(p, &format!("[{i}]"))?,
        };
        if z.len() != dim_x + dim_y {
            return Err(bad(format!("point {i} has {} entries, expected {}", z.len(), dim_x + dim_y)));
        }
        out.push(DVector::from_vec(z));
    }
    Ok(out)
}

fn check_theta(theta: f64) -> Result<(), Fail> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(usage(format!("--theta must lie in [0, 1], got {theta}")))
    }
}

fn execute(cmd: Cmd, out: &mut dyn Write) -> Result<(), Fail> {
    let print = |out: &mut dyn Write, v: &Value| -> Result<(), Fail> {
        writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json")).map_err(|e| numeric(e.to_string()))
    };
    match cmd {
        Cmd::Bench { config, out: dir, full } => {
            let text = std::fs::read_to_string(&config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            let cfg = parse_config(&text).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            std::fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            let res = run_experiment(&cfg, &RunFlags { full, timing: true });
            emit_csv(&res.rows, &dir.join("results.csv")).map_err(numeric)?;
            emit_summary_json(&res.summary, &dir.join("summary.json")).map_err(numeric)?;
            let failed = res.summary.cells.iter().filter(|c| c.error.is_some()).count();
            let v = json!({
                "rows": res.rows.len(),
                "cells": res.summary.cells.len(),
                "failed_cells": failed,
                "skipped_dims": res.summary.skipped_dims,
                "aggregates": res.summary.aggregates,
            });
            print(out, &v)?;
            if failed == res.summary.cells.len() && failed > 0 {
                return Err(numeric("every cell failed"));
            }
            Ok(())
        }
        Cmd::Certify { problem, condition, samples, seed, forced, radius } => {
            let pf = load_problem(&problem)?;
            let zs = solution_set(&pf)?;
            let moduli = moduli_for(&pf, &zs, condition.into())?;
            let p = &pf.problem;
            let forced = match forced {
                Some(f) => forced_points(&f, p.dim_x(), p.dim_y())?,
                None => Vec::new(),
            };
            let o = CertOptions { samples, seed, radius, forced, ..Default::default() };
            let rep = match condition {
                Condition::Qgg => certify_qgg(p, &zs, &moduli, &o),
                Condition::Qfg => certify_qfg(p, &zs, &moduli, &o),
                Condition::Both => return Err(usage("certify needs --condition qgg or qfg")),
            }
            .map_err(numeric)?;
            print(out, &serde_json::to_value(&rep).expect("json"))
        }
        Cmd::Solve { problem, method, theta, condition, max_iters, rel_tol, tail } => {
            check_theta(theta)?;
            let pf = load_problem(&problem)?;
            let zs = solution_set(&pf)?;
            let p = &pf.problem;
            let sm = p.smoothness();
            let m = match method {
                MethodName::Gapd => {
                    let moduli = moduli_for(&pf, &zs, condition.into())?;
                    Method::Gapd(derive_params(&sm, &moduli, theta, 1.0, 1.0).map_err(numeric)?)
                }
                MethodName::Gda => {
                    let unit = GrowthModuli::new(1.0, 1.0, GrowthCondition::Both).expect("unit moduli");
                    Method::Gda(gda_steps(&sm, &unit, GdaStepRule::Heuristic).map_err(numeric)?)
                }
            };
            let x0 = p.set_x().project_euclidean(&DVector::zeros(p.dim_x())).map_err(numeric)?;
            let y0 = p.set_y().project_euclidean(&DVector::zeros(p.dim_y())).map_err(numeric)?;
            let stop = StopRule { max_iters, rel_tol };
            let opts = RunOptions { monitor: Some(&zs), ..Default::default() };
            let tr = run(p, &Geometries::euclidean(), &m, x0, y0, &stop, &opts).map_err(numeric)?;
            let start = tr.records.len().saturating_sub(tail);
            let v = json!({
                "method": tr.method,
                "theta": tr.theta,
                "iterations": tr.iterations,
                "converged": tr.converged,
                "tail": tr.records[start..],
                "final_x": tr.final_x,
                "final_y": tr.final_y,
            });
            print(out, &v)
        }
        Cmd::Params { problem, theta, condition } => {
            check_theta(theta)?;
            let pf = load_problem(&problem)?;
            let zs = solution_set(&pf)?;
            let moduli = moduli_for(&pf, &zs, condition.into())?;
            let sm = pf.problem.smoothness();
            let prm = derive_params(&sm, &moduli, theta, 1.0, 1.0).map_err(numeric)?;
            let rep = stepsize_condition_check(&prm, &sm, &moduli, None).map_err(numeric)?;
            let v = json!({
                "alpha": prm.alpha,
                "one_minus_alpha": prm.one_minus_alpha,
                "beta": prm.beta,
                "tau": prm.tau,
                "sigma": prm.sigma,
                "gamma_x": prm.gamma_x,
                "gamma_y": prm.gamma_y,
                "varsigma": prm.varsigma,
                "moduli": [moduli.mu_x, moduli.mu_y],
                "smoothness": sm,
                "verification": rep,
            });
            print(out, &v)
        }
    }
}

/// Entry point shared by the binary and the tests. Reports go to `out`,
/// diagnostics and usage text to `err`.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.cmd, out) {
        Ok(()) => EXIT_OK,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
