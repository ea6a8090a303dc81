//! Problem files: the JSON documents the command-line tool consumes.
//!
//! A problem file names an equation, optional run settings, an optional sweep
//! axis and an optional positivity witness. Parsing is strict: unknown keys
//! are rejected, every number must be finite and inside its documented range,
//! and every error carries a JSON pointer to the offending spot.
//!
//! Expressions use tagged nodes:
//!
//! ```json
//! {"kind": "const", "value": 2.0, "name": "a"}
//! {"kind": "sin", "amp": 0.99, "freq": 1.0, "phase": 0.0}
//! {"kind": "cos", "amp": 1.0, "freq": 1.0, "phase": 0.0}
//! {"kind": "poly", "coeffs": [1.0, 0.5]}
//! {"kind": "pw_const", "breaks": [1.0], "values": [0.0, 2.0]}
//! {"kind": "sum", "args": [...]}       // likewise "prod"
//! {"kind": "quot", "args": [num, den]}
//! {"kind": "scale", "factor": -0.5, "arg": {...}}
//! ```
//!
//! The optional `name` on a constant marks it as a sweepable parameter; the
//! sweep command replaces every constant carrying the requested name.

use crate::criteria::CertifyConfig;
use crate::equation::{EquationError, EquationSpec};
use crate::expr::CoefficientExpr;
use serde_json::{json, Map, Value};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    /// A structural violation, located by a JSON pointer into the document.
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
    /// The document was well formed but the equation itself is invalid
    /// (wrong declared period, vanishing quotient denominator, ...).
    #[error("/equation: {0}")]
    Equation(#[from] EquationError),
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Child pointer with RFC 6901 escaping.
fn child(pointer: &str, key: &str) -> String {
    format!("{pointer}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn item(pointer: &str, index: usize) -> String {
    format!("{pointer}/{index}")
}

/// A fully validated problem document with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub equation: EquationSpec,
    pub config: RunConfig,
    pub sweep: Option<SweepAxis>,
    /// Candidate nonnegative function for the explicit-witness positivity
    /// certificate; checked over `[t_start, t_start + horizon]`.
    pub witness_u: Option<CoefficientExpr>,
}

/// Run settings and their admissible ranges.
///
/// | key             | range              | default |
/// |-----------------|--------------------|---------|
/// | `tol`           | `[1e-14, 1e-4]`    | `1e-10` |
/// | `horizon`       | `(0, 1e6]`         | `200`   |
/// | `grid`          | `[20, 2000]`       | `50`    |
/// | `search_t`      | `(0, 1e6]`         | `500`   |
/// | `strict_margin` | `[1e-15, 1e-2]`    | `1e-9`  |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub tol: f64,
    pub horizon: f64,
    pub grid: usize,
    pub search_t: f64,
    pub strict_margin: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: 1e-10,
            horizon: 200.0,
            grid: 50,
            search_t: 500.0,
            strict_margin: 1e-9,
        }
    }
}

impl RunConfig {
    /// The certifier settings these run settings induce.
    pub fn certify(&self) -> CertifyConfig {
        CertifyConfig {
            tol: self.tol,
            horizon: self.horizon,
            search_t: self.search_t,
            strict_margin: self.strict_margin,
            ..CertifyConfig::default()
        }
    }
}

/// One sweep axis: replace every constant named `param` by each of `steps`
/// evenly spaced values from `from` to `to` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let d = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.from + d * i as f64).collect()
    }
}

/// Read and validate a problem file.
pub fn parse_problem(path: impl AsRef<Path>) -> Result<ProblemFile, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text)?;
    problem_from_value(&value)
}

/// Validate an already-parsed JSON document.
pub fn problem_from_value(value: &Value) -> Result<ProblemFile, ProblemError> {
    let map = as_object(value, "")?;
    check_keys(map, "", &["equation", "config", "sweep", "witness_u"])?;
    let equation = match map.get("equation") {
        Some(v) => parse_equation(v, "/equation")?,
        None => return Err(schema("/equation", "required key is missing")),
    };
    let config = match map.get("config") {
        Some(v) => parse_config(v, "/config")?,
        None => RunConfig::default(),
    };
    let sweep = match map.get("sweep") {
        Some(v) => Some(parse_sweep(v, "/sweep")?),
        None => None,
    };
    let witness_u = match map.get("witness_u") {
        Some(v) => Some(parse_expr(v, "/witness_u")?),
        None => None,
    };
    equation.validate(config.horizon)?;
    if let Some(sw) = &sweep {
        if equation.named_const_count(&sw.param) == 0 {
            return Err(schema(
                "/sweep/param",
                format!("no constant named {:?} in the equation", sw.param),
            ));
        }
    }
    if let Some(u) = &witness_u {
        u.validate()
            .map_err(|e| schema("/witness_u", e.to_string()))?;
    }
    Ok(ProblemFile {
        equation,
        config,
        sweep,
        witness_u,
    })
}

/// Inverse of [`problem_from_value`]: a document that parses back to `p`.
pub fn serialize_problem(p: &ProblemFile) -> Value {
    let mut root = Map::new();
    root.insert("equation".into(), equation_to_value(&p.equation));
    root.insert(
        "config".into(),
        json!({
            "tol": p.config.tol,
            "horizon": p.config.horizon,
            "grid": p.config.grid,
            "search_t": p.config.search_t,
            "strict_margin": p.config.strict_margin,
        }),
    );
    if let Some(sw) = &p.sweep {
        root.insert(
            "sweep".into(),
            json!({
                "param": sw.param,
                "from": sw.from,
                "to": sw.to,
                "steps": sw.steps,
            }),
        );
    }
    if let Some(u) = &p.witness_u {
        root.insert("witness_u".into(), expr_to_value(u));
    }
    Value::Object(root)
}

pub fn equation_to_value(eq: &EquationSpec) -> Value {
    let mut map = Map::new();
    if !eq.label.is_empty() {
        map.insert("label".into(), Value::String(eq.label.clone()));
    }
    map.insert("a".into(), expr_to_value(&eq.a));
    map.insert("b".into(), expr_to_value(&eq.b));
    if let Some(f) = &eq.f {
        map.insert("f".into(), expr_to_value(f));
    }
    map.insert("t_start".into(), json!(eq.t_start));
    if let Some(omega) = eq.period {
        map.insert("period".into(), json!(omega));
    }
    Value::Object(map)
}

pub fn expr_to_value(e: &CoefficientExpr) -> Value {
    match e {
        CoefficientExpr::Const { value, name } => {
            let mut map = Map::new();
            map.insert("kind".into(), "const".into());
            map.insert("value".into(), json!(value));
            if let Some(n) = name {
                map.insert("name".into(), Value::String(n.clone()));
            }
            Value::Object(map)
        }
        CoefficientExpr::Sin { amp, freq, phase } => {
            json!({"kind": "sin", "amp": amp, "freq": freq, "phase": phase})
        }
        CoefficientExpr::Cos { amp, freq, phase } => {
            json!({"kind": "cos", "amp": amp, "freq": freq, "phase": phase})
        }
        CoefficientExpr::Poly { coeffs } => json!({"kind": "poly", "coeffs": coeffs}),
        CoefficientExpr::PwConst { breaks, values } => {
            json!({"kind": "pw_const", "breaks": breaks, "values": values})
        }
        CoefficientExpr::Sum { args } => {
            json!({"kind": "sum", "args": args.iter().map(expr_to_value).collect::<Vec<_>>()})
        }
        CoefficientExpr::Prod { args } => {
            json!({"kind": "prod", "args": args.iter().map(expr_to_value).collect::<Vec<_>>()})
        }
        CoefficientExpr::Quot { num, den } => {
            json!({"kind": "quot", "args": [expr_to_value(num), expr_to_value(den)]})
        }
        CoefficientExpr::Scale { factor, arg } => {
            json!({"kind": "scale", "factor": factor, "arg": expr_to_value(arg)})
        }
    }
}

fn as_object<'v>(v: &'v Value, ptr: &str) -> Result<&'v Map<String, Value>, ProblemError> {
    v.as_object()
        .ok_or_else(|| schema(ptr, "expected an object"))
}

fn check_keys(map: &Map<String, Value>, ptr: &str, allowed: &[&str]) -> Result<(), ProblemError> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(schema(
                child(ptr, key),
                format!("unknown key (expected one of: {})", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

fn number(v: &Value, ptr: &str) -> Result<f64, ProblemError> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(schema(ptr, "expected a finite number")),
    }
}

fn count(v: &Value, ptr: &str) -> Result<u64, ProblemError> {
    v.as_u64()
        .ok_or_else(|| schema(ptr, "expected a nonnegative integer"))
}

fn string<'v>(v: &'v Value, ptr: &str) -> Result<&'v str, ProblemError> {
    v.as_str().ok_or_else(|| schema(ptr, "expected a string"))
}

fn number_array(v: &Value, ptr: &str) -> Result<Vec<f64>, ProblemError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(ptr, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &item(ptr, i)))
        .collect()
}

fn required<'v>(
    map: &'v Map<String, Value>,
    ptr: &str,
    key: &str,
) -> Result<&'v Value, ProblemError> {
    map.get(key)
        .ok_or_else(|| schema(child(ptr, key), "required key is missing"))
}

fn in_range(x: f64, lo: f64, hi: f64, ptr: &str) -> Result<f64, ProblemError> {
    if x >= lo && x <= hi {
        Ok(x)
    } else {
        Err(schema(ptr, format!("must lie in [{lo:e}, {hi:e}]")))
    }
}

fn parse_equation(v: &Value, ptr: &str) -> Result<EquationSpec, ProblemError> {
    let map = as_object(v, ptr)?;
    check_keys(map, ptr, &["label", "a", "b", "f", "t_start", "period"])?;
    let a = parse_expr(required(map, ptr, "a")?, &child(ptr, "a"))?;
    let b = parse_expr(required(map, ptr, "b")?, &child(ptr, "b"))?;
    let f = match map.get("f") {
        Some(fv) => Some(parse_expr(fv, &child(ptr, "f"))?),
        None => None,
    };
    let t_start = match map.get("t_start") {
        Some(tv) => {
            let p = child(ptr, "t_start");
            let t = number(tv, &p)?;
            if t < 0.0 {
                return Err(schema(p, "start time must be nonnegative"));
            }
            t
        }
        None => 0.0,
    };
    let period = match map.get("period") {
        Some(pv) => {
            let p = child(ptr, "period");
            let omega = number(pv, &p)?;
            if omega <= 0.0 {
                return Err(schema(p, "period must be positive"));
            }
            Some(omega)
        }
        None => None,
    };
    let label = match map.get("label") {
        Some(lv) => string(lv, &child(ptr, "label"))?.to_string(),
        None => String::new(),
    };
    let mut eq = EquationSpec::new(a, b).with_label(label);
    eq.f = f;
    eq.t_start = t_start;
    eq.period = period;
    Ok(eq)
}

fn parse_config(v: &Value, ptr: &str) -> Result<RunConfig, ProblemError> {
    let map = as_object(v, ptr)?;
    check_keys(
        map,
        ptr,
        &["tol", "horizon", "grid", "search_t", "strict_margin"],
    )?;
    let mut cfg = RunConfig::default();
    if let Some(x) = map.get("tol") {
        let p = child(ptr, "tol");
        cfg.tol = in_range(number(x, &p)?, 1e-14, 1e-4, &p)?;
    }
    if let Some(x) = map.get("horizon") {
        let p = child(ptr, "horizon");
        let h = number(x, &p)?;
        if !(h > 0.0 && h <= 1e6) {
            return Err(schema(p, "must lie in (0, 1e6]"));
        }
        cfg.horizon = h;
    }
    if let Some(x) = map.get("grid") {
        let p = child(ptr, "grid");
        let g = count(x, &p)?;
        if !(20..=2000).contains(&g) {
            return Err(schema(p, "must lie in [20, 2000]"));
        }
        cfg.grid = g as usize;
    }
    if let Some(x) = map.get("search_t") {
        let p = child(ptr, "search_t");
        let s = number(x, &p)?;
        if !(s > 0.0 && s <= 1e6) {
            return Err(schema(p, "must lie in (0, 1e6]"));
        }
        cfg.search_t = s;
    }
    if let Some(x) = map.get("strict_margin") {
        let p = child(ptr, "strict_margin");
        cfg.strict_margin = in_range(number(x, &p)?, 1e-15, 1e-2, &p)?;
    }
    Ok(cfg)
}

fn parse_sweep(v: &Value, ptr: &str) -> Result<SweepAxis, ProblemError> {
    let map = as_object(v, ptr)?;
    check_keys(map, ptr, &["param", "from", "to", "steps"])?;
    let param = string(required(map, ptr, "param")?, &child(ptr, "param"))?.to_string();
    if param.is_empty() {
        return Err(schema(child(ptr, "param"), "must be nonempty"));
    }
    let from = number(required(map, ptr, "from")?, &child(ptr, "from"))?;
    let to = number(required(map, ptr, "to")?, &child(ptr, "to"))?;
    let steps_ptr = child(ptr, "steps");
    let steps = count(required(map, ptr, "steps")?, &steps_ptr)?;
    if !(2..=100_000).contains(&steps) {
        return Err(schema(steps_ptr, "must lie in [2, 100000]"));
    }
    Ok(SweepAxis {
        param,
        from,
        to,
        steps: steps as usize,
    })
}

fn parse_expr(v: &Value, ptr: &str) -> Result<CoefficientExpr, ProblemError> {
    let map = as_object(v, ptr)?;
    let kind_ptr = child(ptr, "kind");
    let kind = string(required(map, ptr, "kind")?, &kind_ptr)?;
    match kind {
        "const" => {
            check_keys(map, ptr, &["kind", "value", "name"])?;
            let value = number(required(map, ptr, "value")?, &child(ptr, "value"))?;
            let name = match map.get("name") {
                Some(nv) => {
                    let p = child(ptr, "name");
                    let n = string(nv, &p)?;
                    if n.is_empty() {
                        return Err(schema(p, "must be nonempty"));
                    }
                    Some(n.to_string())
                }
                None => None,
            };
            Ok(CoefficientExpr::Const { value, name })
        }
        "sin" | "cos" => {
            check_keys(map, ptr, &["kind", "amp", "freq", "phase"])?;
            let amp = number(required(map, ptr, "amp")?, &child(ptr, "amp"))?;
            let freq = number(required(map, ptr, "freq")?, &child(ptr, "freq"))?;
            let phase = match map.get("phase") {
                Some(pv) => number(pv, &child(ptr, "phase"))?,
                None => 0.0,
            };
            if kind == "sin" {
                Ok(CoefficientExpr::Sin { amp, freq, phase })
            } else {
                Ok(CoefficientExpr::Cos { amp, freq, phase })
            }
        }
        "poly" => {
            check_keys(map, ptr, &["kind", "coeffs"])?;
            let cp = child(ptr, "coeffs");
            let coeffs = number_array(required(map, ptr, "coeffs")?, &cp)?;
            if coeffs.is_empty() {
                return Err(schema(cp, "needs at least one coefficient"));
            }
            Ok(CoefficientExpr::Poly { coeffs })
        }
        "pw_const" => {
            check_keys(map, ptr, &["kind", "breaks", "values"])?;
            let bp = child(ptr, "breaks");
            let breaks = number_array(required(map, ptr, "breaks")?, &bp)?;
            if breaks.is_empty() {
                return Err(schema(bp, "needs at least one break"));
            }
            if breaks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(schema(bp, "breaks must be strictly increasing"));
            }
            let vp = child(ptr, "values");
            let values = number_array(required(map, ptr, "values")?, &vp)?;
            if values.len() != breaks.len() + 1 {
                return Err(schema(
                    vp,
                    format!("needs exactly {} values, one more than breaks", breaks.len() + 1),
                ));
            }
            Ok(CoefficientExpr::PwConst { breaks, values })
        }
        "sum" | "prod" => {
            check_keys(map, ptr, &["kind", "args"])?;
            let ap = child(ptr, "args");
            let args = parse_args(required(map, ptr, "args")?, &ap)?;
            if args.len() < 2 {
                return Err(schema(ap, "needs at least two arguments"));
            }
            if kind == "sum" {
                Ok(CoefficientExpr::Sum { args })
            } else {
                Ok(CoefficientExpr::Prod { args })
            }
        }
        "quot" => {
            check_keys(map, ptr, &["kind", "args"])?;
            let ap = child(ptr, "args");
            let mut args = parse_args(required(map, ptr, "args")?, &ap)?;
            if args.len() != 2 {
                return Err(schema(ap, "needs exactly two arguments: [numerator, denominator]"));
            }
            let den = Box::new(args.pop().unwrap());
            let num = Box::new(args.pop().unwrap());
            Ok(CoefficientExpr::Quot { num, den })
        }
        "scale" => {
            check_keys(map, ptr, &["kind", "factor", "arg"])?;
            let factor = number(required(map, ptr, "factor")?, &child(ptr, "factor"))?;
            let arg = parse_expr(required(map, ptr, "arg")?, &child(ptr, "arg"))?;
            Ok(CoefficientExpr::Scale {
                factor,
                arg: Box::new(arg),
            })
        }
        other => Err(schema(
            kind_ptr,
            format!(
                "unknown expression kind {other:?} (expected const, sin, cos, poly, pw_const, \
                 sum, prod, quot or scale)"
            ),
        )),
    }
}

fn parse_args(v: &Value, ptr: &str) -> Result<Vec<CoefficientExpr>, ProblemError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(ptr, "expected an array of expressions"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| parse_expr(x, &item(ptr, i)))
        .collect()
}
