//! Report rendering: the JSON documents and CSV tables the command-line
//! tool emits.
//!
//! Every numeric field is printed with 17 significant digits so that the
//! underlying f64 can be recovered exactly and two runs of the same job
//! produce byte-identical artifacts. Values that are not finite become JSON
//! `null`; in CSV they print as `inf`, `-inf` or `NaN`.

use crate::criteria::Certificate;
use crate::floquet::FloquetResult;
use crate::oracle::DecayEstimate;
use crate::solve::Trajectory;
use serde_json::{json, Map, Number, Value};

/// 17 significant digits in scientific notation with a signed exponent,
/// matching the form the JSON serializer emits.
fn sig17(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.find('e') {
        Some(i) if !matches!(s.as_bytes()[i + 1], b'+' | b'-') => {
            format!("{}e+{}", &s[..i], &s[i + 1..])
        }
        _ => s,
    }
}

/// A JSON number carrying 17 significant digits, or null when not finite.
pub fn num17(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_string_unchecked(sig17(x)))
    } else {
        Value::Null
    }
}

/// The same fixed-width rendering for CSV cells.
pub fn csv17(x: f64) -> String {
    sig17(x)
}

/// Pretty-printed document with a trailing newline.
pub fn render_json(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("reports contain no opaque types");
    out.push('\n');
    out
}

pub fn certificate_json(c: &Certificate) -> Value {
    let witnesses: Map<String, Value> = c
        .witnesses
        .iter()
        .map(|(k, &v)| (k.clone(), num17(v)))
        .collect();
    json!({
        "criterion": c.criterion,
        "verdict": c.verdict.as_str(),
        "claim": c.claim.as_str(),
        "witnesses": witnesses,
        "margin": num17(c.margin),
        "window": {
            "lo": num17(c.window.lo),
            "hi": num17(c.window.hi),
            "periodic": c.window.periodic,
        },
        "paper_ref": c.paper_ref,
    })
}

/// The `certify` document: every certificate plus the strongest claim among
/// the passing ones.
pub fn certify_json(label: &str, summary: &str, certs: &[Certificate]) -> Value {
    json!({
        "label": label,
        "summary": summary,
        "certificates": certs.iter().map(certificate_json).collect::<Vec<_>>(),
    })
}

/// The `floquet` document: monodromy data, multipliers in polar form, the
/// classification and the guard evidence behind it.
pub fn floquet_json(r: &FloquetResult) -> Value {
    let lambda: Vec<Value> = r
        .lambda
        .iter()
        .map(|l| json!({"mod": num17(l.norm()), "arg": num17(l.arg())}))
        .collect();
    json!({
        "omega": num17(r.mono.omega),
        "trace": num17(r.mono.trace),
        "W_direct": num17(r.mono.w_direct),
        "W_liouville": num17(r.mono.w_liouville),
        "lambda": lambda,
        "classification": r.classification.as_str(),
        "guard": {
            "zone_k": r.zone.as_ref().and_then(|z| z.k),
            "min_gap": r.spacing.min_gap.map_or(Value::Null, num17),
            "max_gap": r.spacing.max_gap.map_or(Value::Null, num17),
            "near_boundary": r.zone.as_ref().is_some_and(|z| z.near_boundary),
        },
    })
}

/// Everything the `oracle` command measures.
#[derive(Debug, Clone)]
pub struct OracleSummary {
    pub decay: DecayEstimate,
    pub positivity: bool,
    /// Extremes of the unit-forcing response integral; absent when the
    /// positivity scan failed and the bracketing bound does not apply.
    pub response_range: Option<(f64, f64)>,
    pub identity_discrepancy: f64,
}

pub fn oracle_json(o: &OracleSummary) -> Value {
    json!({
        "decay": {
            "rate": num17(o.decay.lambda_fit),
            "K": num17(o.decay.k_fit),
            "residual": num17(o.decay.residual),
            "method": o.decay.method,
        },
        "positivity": o.positivity,
        "eq34": o.response_range.map_or(Value::Null, |(min, max)| {
            json!({"min": num17(min), "max": num17(max)})
        }),
        "lemma6_max_discrepancy": num17(o.identity_discrepancy),
    })
}

/// The `simulate` table: `rows + 1` states sampled uniformly across the
/// integrated span, dense-output interpolated.
pub fn simulate_csv(traj: &Trajectory, rows: usize) -> String {
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let mut out = String::from("t,x,xdot\n");
    for i in 0..=rows {
        let t = t0 + (t1 - t0) * i as f64 / rows as f64;
        let [x, v] = traj.state(t);
        out.push_str(&format!("{},{},{}\n", csv17(t), csv17(x), csv17(v)));
    }
    out
}

pub const SWEEP_HEADER: &str =
    "index,value,c1,c2_levin,t3,c7,t6,t7,t8,t9,t10,summary,lambda_fit";

/// One sweep row: the parameter value, the verdict of each criterion in the
/// canonical order, the summary claim, and the measured decay rate.
pub fn sweep_row(
    index: usize,
    value: f64,
    certs: &[Certificate],
    summary: &str,
    lambda_fit: f64,
) -> String {
    let verdicts: Vec<&str> = certs.iter().map(|c| c.verdict.as_str()).collect();
    format!(
        "{index},{},{},{summary},{}",
        csv17(value),
        verdicts.join(","),
        csv17(lambda_fit),
    )
}
