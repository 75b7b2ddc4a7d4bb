//! Experiment configuration files.
//!
//! ```json
//! {
//!   "dims": [[20, 16, 16, 12]],
//!   "seeds": [1, 2, 3],
//!   "methods": ["gda", {"method": "gapd", "theta": [0, 0.5, 0.99, 1]}],
//!   "coupling_std": 5.0,
//!   "instance": "random",
//!   "max_iters": 100000,
//!   "rel_tol": 1e-8,
//!   "monitors": true,
//!   "growth_condition": "both"
//! }
//! ```
//!
//! Only `dims`, `seeds` and `methods` are required. A GDA entry may carry
//! `"step": "heuristic" | "theory" | <number>`.

use serde_json::{Map, Value};
use sella::growth::GrowthCondition;
use sella::solver::GdaStepRule;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {msg}")]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

fn fail<T>(path: impl Into<String>, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { path: path.into(), msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GdaStep {
    Rule(GdaStepRule),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Gda(GdaStep),
    Gapd { thetas: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// Gaussian data; unique saddle point, ξ constants uncertified.
    Random,
    /// Coupling factored through C₁ and C₂; certified moduli.
    Admissible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<[usize; 4]>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSpec>,
    pub coupling_std: f64,
    pub instance: InstanceKind,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub monitors: bool,
    pub growth_condition: GrowthCondition,
    pub output: Option<String>,
}

const KEYS: &[&str] =
    &["dims", "seeds", "methods", "coupling_std", "instance", "max_iters", "rel_tol", "monitors", "growth_condition", "output"];

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), ConfigError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => fail(format!("{path}{k}"), "unknown key"),
        None => Ok(()),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize, ConfigError> {
    match v.as_u64() {
        Some(u) => Ok(u as usize),
        // Accept integral floats such as 1e5.
        None => match v.as_f64() {
            Some(f) if f >= 0.0 && f.fract() == 0.0 && f <= u32::MAX as f64 => Ok(f as usize),
            _ => fail(path, "expected a nonnegative integer"),
        },
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64, ConfigError> {
    v.as_f64().map_or_else(|| fail(path, "expected a number"), Ok)
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ConfigError> {
    v.as_array().map_or_else(|| fail(path, "expected an array"), Ok)
}

fn nonempty<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ConfigError> {
    let a = as_array(v, path)?;
    if a.is_empty() {
        return fail(path, "must not be empty");
    }
    Ok(a)
}

fn theta(v: &Value, path: &str) -> Result<f64, ConfigError> {
    let t = as_f64(v, path)?;
    if !(0.0..=1.0).contains(&t) {
        return fail(path, format!("theta must lie in [0, 1], got {t}"));
    }
    Ok(t)
}

fn method(v: &Value, path: &str) -> Result<MethodSpec, ConfigError> {
    let (name, obj) = match v {
        Value::String(s) => (s.as_str(), None),
        Value::Object(o) => match o.get("method").and_then(Value::as_str) {
            Some(s) => (s, Some(o)),
            None => return fail(format!("{path}.method"), "missing or not a string"),
        },
        _ => return fail(path, "expected a method name or object"),
    };
    match name {
        "gda" => {
            let mut step = GdaStep::Rule(GdaStepRule::Heuristic);
            if let Some(o) = obj {
                reject_unknown(o, &["method", "step"], &format!("{path}."))?;
                if let Some(s) = o.get("step") {
                    let sp = format!("{path}.step");
                    step = match s {
                        Value::String(r) if r == "heuristic" => GdaStep::Rule(GdaStepRule::Heuristic),
                        Value::String(r) if r == "theory" => GdaStep::Rule(GdaStepRule::Theory),
                        Value::Number(_) => {
                            let h = as_f64(s, &sp)?;
                            if !(h > 0.0 && h.is_finite()) {
                                return fail(sp, "step must be positive");
                            }
                            GdaStep::Fixed(h)
                        }
                        _ => return fail(sp, "expected \"heuristic\", \"theory\" or a number"),
                    };
                }
            }
            Ok(MethodSpec::Gda(step))
        }
        "gapd" => {
            let Some(o) = obj else {
                return fail(path, "gapd needs an object with a theta list");
            };
            reject_unknown(o, &["method", "theta"], &format!("{path}."))?;
            let tp = format!("{path}.theta");
            let thetas = match o.get("theta") {
                None => return fail(tp, "missing"),
                Some(Value::Array(a)) => {
                    if a.is_empty() {
                        return fail(tp, "must not be empty");
                    }
                    a.iter().enumerate().map(|(i, t)| theta(t, &format!("{tp}[{i}]"))).collect::<Result<_, _>>()?
                }
                Some(t) => vec![theta(t, &tp)?],
            };
            Ok(MethodSpec::Gapd { thetas })
        }
        other => fail(format!("{path}.method"), format!("unknown method '{other}'")),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let v: Value = serde_json::from_str(text).or_else(|e| fail("$", e.to_string()))?;
    let Value::Object(obj) = &v else {
        return fail("$", "expected an object");
    };
    reject_unknown(obj, KEYS, "")?;
    let req = |k: &str| obj.get(k).map_or_else(|| fail(k, "missing"), Ok);

    let mut dims = Vec::new();
    for (i, d) in nonempty(req("dims")?, "dims")?.iter().enumerate() {
        let p = format!("dims[{i}]");
        let a = as_array(d, &p)?;
        if a.len() != 4 {
            return fail(p, "expected [n, m, p, q]");
        }
        let mut t = [0; 4];
        for (j, x) in a.iter().enumerate() {
            t[j] = as_usize(x, &format!("{p}[{j}]"))?;
            if t[j] == 0 {
                return fail(format!("{p}[{j}]"), "must be positive");
            }
        }
        dims.push(t);
    }

    let seeds = nonempty(req("seeds")?, "seeds")?
        .iter()
        .enumerate()
        .map(|(i, s)| s.as_u64().map_or_else(|| fail(format!("seeds[{i}]"), "expected a nonnegative integer"), Ok))
        .collect::<Result<Vec<_>, _>>()?;

    let methods = nonempty(req("methods")?, "methods")?
        .iter()
        .enumerate()
        .map(|(i, m)| method(m, &format!("methods[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    let coupling_std = match obj.get("coupling_std") {
        Some(c) => {
            let c = as_f64(c, "coupling_std")?;
            if !(c > 0.0 && c.is_finite()) {
                return fail("coupling_std", "must be positive");
            }
            c
        }
        None => 5.0,
    };
    let instance = match obj.get("instance").map(|s| s.as_str()) {
        None | Some(Some("random")) => InstanceKind::Random,
        Some(Some("admissible")) => InstanceKind::Admissible,
        _ => return fail("instance", "expected \"random\" or \"admissible\""),
    };
    let max_iters = obj.get("max_iters").map_or(Ok(100_000), |m| as_usize(m, "max_iters"))?;
    let rel_tol = obj.get("rel_tol").map_or(Ok(1e-8), |r| as_f64(r, "rel_tol"))?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return fail("rel_tol", format!("must lie in (0, 1), got {rel_tol}"));
    }
    let monitors = match obj.get("monitors") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(_) => return fail("monitors", "expected a boolean"),
    };
    let growth_condition = match obj.get("growth_condition").map(|s| s.as_str()) {
        None | Some(Some("both")) => GrowthCondition::Both,
        Some(Some("qfg")) => GrowthCondition::TwoSidedQfg,
        Some(Some("qgg")) => GrowthCondition::TwoSidedQgg,
        _ => return fail("growth_condition", "expected \"qfg\", \"qgg\" or \"both\""),
    };
    let output = match obj.get("output") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return fail("output", "expected a string"),
    };
    Ok(ExperimentConfig { dims, seeds, methods, coupling_std, instance, max_iters, rel_tol, monitors, growth_condition, output })
}
