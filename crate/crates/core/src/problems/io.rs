//! JSON problem files. Matrices are stored row-major with explicit sizes;
//! floats round-trip bit-exactly, infinite bounds are written as the strings
//! `"inf"` and `"-inf"`.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use super::{ProblemError, ProblemMeta, QuadraticSaddle, SaddleProblem, SmoothnessConstants, StructuredProblem};
use crate::geometry::SimpleSet;

pub const FORMAT: &str = "sella-problem";
pub const VERSION: u64 = 1;

/// Either problem family that can be stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyProblem {
    Quadratic(QuadraticSaddle),
    Structured(StructuredProblem),
}

impl AnyProblem {
    pub fn quadratic(&self) -> &QuadraticSaddle {
        match self {
            AnyProblem::Quadratic(q) => q,
            AnyProblem::Structured(s) => &s.quad,
        }
    }
}

impl SaddleProblem for AnyProblem {
    fn dim_x(&self) -> usize {
        self.quadratic().dim_x()
    }
    fn dim_y(&self) -> usize {
        self.quadratic().dim_y()
    }
    fn eval_f(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.quadratic().eval_f(x, y)
    }
    fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.quadratic().grad_x(x, y)
    }
    fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.quadratic().grad_y(x, y)
    }
    fn set_x(&self) -> &SimpleSet {
        self.quadratic().set_x()
    }
    fn set_y(&self) -> &SimpleSet {
        self.quadratic().set_y()
    }
    fn smoothness(&self) -> SmoothnessConstants {
        self.quadratic().smoothness()
    }
}

/// Growth moduli stored alongside a problem (for fixtures whose moduli are
/// known analytically).
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliHint {
    pub mu_x: f64,
    pub mu_y: f64,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: AnyProblem,
    pub moduli: Option<ModuliHint>,
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

fn vec_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn mat_json(m: &DMatrix<f64>) -> Value {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(num(m[(i, j)]));
        }
    }
    json!({"rows": m.nrows(), "cols": m.ncols(), "data": data})
}

fn set_json(s: &SimpleSet) -> Value {
    match s {
        SimpleSet::WholeSpace { dim } => json!({"kind": "whole_space", "dim": dim}),
        SimpleSet::Box { lower, upper } => json!({"kind": "box", "lower": vec_json(lower), "upper": vec_json(upper)}),
        SimpleSet::Halfspaces { g, a } => json!({"kind": "halfspaces", "G": mat_json(g), "a": vec_json(a)}),
        SimpleSet::Affine { a, b } => json!({"kind": "affine", "A": mat_json(a), "b": vec_json(b)}),
        SimpleSet::Simplex { dim, radius } => json!({"kind": "simplex", "dim": dim, "radius": num(*radius)}),
    }
}

pub fn to_json(file: &ProblemFile) -> Value {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(FORMAT));
    obj.insert("version".into(), json!(VERSION));
    let q = file.problem.quadratic();
    match &file.problem {
        AnyProblem::Quadratic(_) => {
            obj.insert("kind".into(), json!("quadratic"));
            obj.insert("lin_x".into(), vec_json(&q.lin_x));
            obj.insert("lin_y".into(), vec_json(&q.lin_y));
            obj.insert("constant".into(), num(q.constant));
        }
        AnyProblem::Structured(s) => {
            obj.insert("kind".into(), json!("structured"));
            obj.insert("meta".into(), serde_json::to_value(&s.meta).expect("meta serialises"));
            obj.insert("b1".into(), vec_json(&s.b1));
            obj.insert("b2".into(), vec_json(&s.b2));
            obj.insert("offset".into(), num(s.offset));
        }
    }
    obj.insert("C1".into(), mat_json(&q.c1));
    obj.insert("C2".into(), mat_json(&q.c2));
    obj.insert("A".into(), mat_json(&q.a));
    obj.insert("set_x".into(), set_json(&q.set_x));
    obj.insert("set_y".into(), set_json(&q.set_y));
    if let Some(h) = &file.moduli {
        obj.insert("moduli".into(), json!({"mu_x": num(h.mu_x), "mu_y": num(h.mu_y), "condition": h.condition}));
    }
    Value::Object(obj)
}

pub fn to_string(file: &ProblemFile) -> String {
    serde_json::to_string_pretty(&to_json(file)).expect("values are serialisable")
}

fn err(path: &str, msg: &str) -> ProblemError {
    ProblemError::Format(format!("{path}: {msg}"))
}

fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, ProblemError> {
    v.get(key).ok_or_else(|| err(&format!("{path}.{key}"), "missing"))
}

fn parse_num(v: &Value, path: &str) -> Result<f64, ProblemError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| err(path, "not a float")),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        _ => Err(err(path, "expected a number")),
    }
}

fn parse_usize(v: &Value, path: &str) -> Result<usize, ProblemError> {
    v.as_u64().map(|u| u as usize).ok_or_else(|| err(path, "expected a nonnegative integer"))
}

fn parse_vec(v: &Value, path: &str) -> Result<DVector<f64>, ProblemError> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array"))?;
    let vals: Result<Vec<f64>, _> = arr.iter().enumerate().map(|(i, x)| parse_num(x, &format!("{path}[{i}]"))).collect();
    Ok(DVector::from_vec(vals?))
}

fn parse_mat(v: &Value, path: &str) -> Result<DMatrix<f64>, ProblemError> {
    let rows = parse_usize(get(v, "rows", path)?, &format!("{path}.rows"))?;
    let cols = parse_usize(get(v, "cols", path)?, &format!("{path}.cols"))?;
    let data = parse_vec(get(v, "data", path)?, &format!("{path}.data"))?;
    if data.len() != rows * cols {
        return Err(err(path, &format!("data has {} entries, expected {}", data.len(), rows * cols)));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data.as_slice()))
}

fn parse_set(v: &Value, path: &str) -> Result<SimpleSet, ProblemError> {
    let kind = get(v, "kind", path)?.as_str().ok_or_else(|| err(path, "kind must be a string"))?;
    let set = match kind {
        "whole_space" => SimpleSet::whole(parse_usize(get(v, "dim", path)?, &format!("{path}.dim"))?),
        "box" => SimpleSet::boxed(
            parse_vec(get(v, "lower", path)?, &format!("{path}.lower"))?,
            parse_vec(get(v, "upper", path)?, &format!("{path}.upper"))?,
        )?,
        "halfspaces" => SimpleSet::halfspaces(
            parse_mat(get(v, "G", path)?, &format!("{path}.G"))?,
            parse_vec(get(v, "a", path)?, &format!("{path}.a"))?,
        )?,
        "affine" => SimpleSet::affine(
            parse_mat(get(v, "A", path)?, &format!("{path}.A"))?,
            parse_vec(get(v, "b", path)?, &format!("{path}.b"))?,
        )?,
        "simplex" => SimpleSet::simplex(
            parse_usize(get(v, "dim", path)?, &format!("{path}.dim"))?,
            parse_num(get(v, "radius", path)?, &format!("{path}.radius"))?,
        )?,
        other => return Err(err(&format!("{path}.kind"), &format!("unknown set kind '{other}'"))),
    };
    Ok(set)
}

pub fn from_json(v: &Value) -> Result<ProblemFile, ProblemError> {
    let p = "$";
    if get(v, "format", p)?.as_str() != Some(FORMAT) {
        return Err(err("$.format", &format!("expected '{FORMAT}'")));
    }
    if get(v, "version", p)?.as_u64() != Some(VERSION) {
        return Err(err("$.version", &format!("unsupported version, expected {VERSION}")));
    }
    let c1 = parse_mat(get(v, "C1", p)?, "$.C1")?;
    let c2 = parse_mat(get(v, "C2", p)?, "$.C2")?;
    let a = parse_mat(get(v, "A", p)?, "$.A")?;
    let set_x = parse_set(get(v, "set_x", p)?, "$.set_x")?;
    let set_y = parse_set(get(v, "set_y", p)?, "$.set_y")?;
    let problem = match get(v, "kind", p)?.as_str() {
        Some("quadratic") => AnyProblem::Quadratic(QuadraticSaddle::new(
            c1,
            c2,
            a,
            parse_vec(get(v, "lin_x", p)?, "$.lin_x")?,
            parse_vec(get(v, "lin_y", p)?, "$.lin_y")?,
            parse_num(get(v, "constant", p)?, "$.constant")?,
            set_x,
            set_y,
        )?),
        Some("structured") => {
            let meta: ProblemMeta = match v.get("meta") {
                Some(m) => serde_json::from_value(m.clone()).map_err(|e| err("$.meta", &e.to_string()))?,
                None => ProblemMeta::default(),
            };
            AnyProblem::Structured(StructuredProblem::new(
                c1,
                c2,
                a,
                parse_vec(get(v, "b1", p)?, "$.b1")?,
                parse_vec(get(v, "b2", p)?, "$.b2")?,
                parse_num(get(v, "offset", p)?, "$.offset")?,
                set_x,
                set_y,
                meta,
            )?)
        }
        _ => return Err(err("$.kind", "expected 'quadratic' or 'structured'")),
    };
    let moduli = match v.get("moduli") {
        None | Some(Value::Null) => None,
        Some(m) => Some(ModuliHint {
            mu_x: parse_num(get(m, "mu_x", "$.moduli")?, "$.moduli.mu_x")?,
            mu_y: parse_num(get(m, "mu_y", "$.moduli")?, "$.moduli.mu_y")?,
            condition: get(m, "condition", "$.moduli")?.as_str().unwrap_or("both").to_string(),
        }),
    };
    Ok(ProblemFile { problem, moduli })
}

pub fn from_str(text: &str) -> Result<ProblemFile, ProblemError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ProblemError::Format(e.to_string()))?;
    from_json(&v)
}
