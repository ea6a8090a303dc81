//! Coefficient expressions: the closed family of functions allowed as a(t),
//! b(t) and f(t).
//!
//! The family covers constants, sinusoids, polynomials, right-continuous step
//! functions, and sums, products, quotients and scalar multiples of those.
//! It is closed under differentiation (steps differentiate to zero away from
//! their jumps), which the damping-removal substitution relies on.
//!
//! Step functions make pointwise evaluation ambiguous at a jump, so plain
//! [`CoefficientExpr::eval`] refuses breakpoints and callers that integrate
//! across a jump must ask for a one-sided limit via [`CoefficientExpr::eval_side`].

use thiserror::Error;

/// Which one-sided limit to take when evaluating at a jump of a step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Error)]
pub enum ExprError {
    /// Evaluation landed exactly on a jump of a step function.
    #[error("evaluation at breakpoint t = {t}; request a one-sided limit instead")]
    AtBreakpoint { t: f64 },
    /// The expression tree itself is malformed.
    #[error("invalid expression: {0}")]
    Invalid(String),
}

/// A scalar function of time built from a small closed grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientExpr {
    /// A constant. The optional name marks it as a sweepable parameter.
    Const { value: f64, name: Option<String> },
    /// `amp * sin(freq * t + phase)`.
    Sin { amp: f64, freq: f64, phase: f64 },
    /// `amp * cos(freq * t + phase)`.
    Cos { amp: f64, freq: f64, phase: f64 },
    /// `coeffs[0] + coeffs[1] t + coeffs[2] t^2 + ...`
    Poly { coeffs: Vec<f64> },
    /// Right-continuous step function. `values` has one more entry than
    /// `breaks`; `values[i]` applies on `[breaks[i-1], breaks[i])`.
    PwConst { breaks: Vec<f64>, values: Vec<f64> },
    Sum { args: Vec<CoefficientExpr> },
    Prod { args: Vec<CoefficientExpr> },
    /// `num / den`. Denominator zeros are rejected at problem load time.
    Quot {
        num: Box<CoefficientExpr>,
        den: Box<CoefficientExpr>,
    },
    /// `factor * arg`.
    Scale {
        factor: f64,
        arg: Box<CoefficientExpr>,
    },
}

/// Essential bounds of an expression over an interval.
///
/// `rigorous` is true when the bounds come from closed-form range analysis;
/// otherwise they were obtained by dense sampling and are correct only up to
/// the sampling resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssBounds {
    pub inf: f64,
    pub sup: f64,
    pub rigorous: bool,
}

impl CoefficientExpr {
    /// Constant without a sweep name.
    pub fn constant(value: f64) -> Self {
        CoefficientExpr::Const { value, name: None }
    }

    /// Evaluate at `t`. Fails if `t` is exactly a jump of some step function
    /// in the tree.
    pub fn eval(&self, t: f64) -> Result<f64, ExprError> {
        self.eval_impl(t, None)
    }

    /// Evaluate the one-sided limit at `t`. Total: away from jumps the side
    /// is irrelevant.
    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        match self.eval_impl(t, Some(side)) {
            Ok(v) => v,
            Err(_) => unreachable!("one-sided evaluation is total"),
        }
    }

    fn eval_impl(&self, t: f64, side: Option<Side>) -> Result<f64, ExprError> {
        match self {
            CoefficientExpr::Const { value, .. } => Ok(*value),
            CoefficientExpr::Sin { amp, freq, phase } => Ok(amp * (freq * t + phase).sin()),
            CoefficientExpr::Cos { amp, freq, phase } => Ok(amp * (freq * t + phase).cos()),
            CoefficientExpr::Poly { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * t + c;
                }
                Ok(acc)
            }
            CoefficientExpr::PwConst { breaks, values } => {
                let idx = match breaks.binary_search_by(|b| b.total_cmp(&t)) {
                    Ok(hit) => match side {
                        None => return Err(ExprError::AtBreakpoint { t }),
                        Some(Side::Right) => hit + 1,
                        Some(Side::Left) => hit,
                    },
                    Err(ins) => ins,
                };
                Ok(values[idx])
            }
            CoefficientExpr::Sum { args } => {
                let mut acc = 0.0;
                for a in args {
                    acc += a.eval_impl(t, side)?;
                }
                Ok(acc)
            }
            CoefficientExpr::Prod { args } => {
                let mut acc = 1.0;
                for a in args {
                    acc *= a.eval_impl(t, side)?;
                }
                Ok(acc)
            }
            CoefficientExpr::Quot { num, den } => {
                Ok(num.eval_impl(t, side)? / den.eval_impl(t, side)?)
            }
            CoefficientExpr::Scale { factor, arg } => Ok(factor * arg.eval_impl(t, side)?),
        }
    }

    /// All step-function jumps strictly inside `(lo, hi)`, sorted and deduplicated.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breaks(&mut out);
        out.retain(|&b| b > lo && b < hi);
        out.sort_unstable_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<f64>) {
        match self {
            CoefficientExpr::PwConst { breaks, .. } => out.extend_from_slice(breaks),
            CoefficientExpr::Sum { args } | CoefficientExpr::Prod { args } => {
                for a in args {
                    a.collect_breaks(out);
                }
            }
            CoefficientExpr::Quot { num, den } => {
                num.collect_breaks(out);
                den.collect_breaks(out);
            }
            CoefficientExpr::Scale { arg, .. } => arg.collect_breaks(out),
            _ => {}
        }
    }

    pub fn has_breakpoints(&self) -> bool {
        match self {
            CoefficientExpr::PwConst { breaks, .. } => !breaks.is_empty(),
            CoefficientExpr::Sum { args } | CoefficientExpr::Prod { args } => {
                args.iter().any(CoefficientExpr::has_breakpoints)
            }
            CoefficientExpr::Quot { num, den } => num.has_breakpoints() || den.has_breakpoints(),
            CoefficientExpr::Scale { arg, .. } => arg.has_breakpoints(),
            _ => false,
        }
    }

    /// Derivative within the same grammar. Step functions differentiate to
    /// zero, which is their derivative almost everywhere; the jump locations
    /// carry no mass for the integrals this feeds.
    pub fn derivative(&self) -> CoefficientExpr {
        match self {
            CoefficientExpr::Const { .. } | CoefficientExpr::PwConst { .. } => {
                CoefficientExpr::constant(0.0)
            }
            CoefficientExpr::Sin { amp, freq, phase } => CoefficientExpr::Cos {
                amp: amp * freq,
                freq: *freq,
                phase: *phase,
            },
            CoefficientExpr::Cos { amp, freq, phase } => CoefficientExpr::Sin {
                amp: -amp * freq,
                freq: *freq,
                phase: *phase,
            },
            CoefficientExpr::Poly { coeffs } => {
                if coeffs.len() <= 1 {
                    return CoefficientExpr::constant(0.0);
                }
                let d = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| k as f64 * c)
                    .collect();
                CoefficientExpr::Poly { coeffs: d }
            }
            CoefficientExpr::Sum { args } => CoefficientExpr::Sum {
                args: args.iter().map(CoefficientExpr::derivative).collect(),
            },
            CoefficientExpr::Prod { args } => {
                let terms = (0..args.len())
                    .map(|i| {
                        let factors = args
                            .iter()
                            .enumerate()
                            .map(|(j, a)| if i == j { a.derivative() } else { a.clone() })
                            .collect();
                        CoefficientExpr::Prod { args: factors }
                    })
                    .collect();
                CoefficientExpr::Sum { args: terms }
            }
            CoefficientExpr::Quot { num, den } => {
                let num_d = num.derivative();
                let den_d = den.derivative();
                let top = CoefficientExpr::Sum {
                    args: vec![
                        CoefficientExpr::Prod {
                            args: vec![num_d, (**den).clone()],
                        },
                        CoefficientExpr::Scale {
                            factor: -1.0,
                            arg: Box::new(CoefficientExpr::Prod {
                                args: vec![(**num).clone(), den_d],
                            }),
                        },
                    ],
                };
                CoefficientExpr::Quot {
                    num: Box::new(top),
                    den: Box::new(CoefficientExpr::Prod {
                        args: vec![(**den).clone(), (**den).clone()],
                    }),
                }
            }
            CoefficientExpr::Scale { factor, arg } => CoefficientExpr::Scale {
                factor: *factor,
                arg: Box::new(arg.derivative()),
            },
        }
    }

    /// `max(expr, 0)` as an evaluable handle.
    pub fn positive_part(&self) -> PartFn {
        PartFn {
            expr: self.clone(),
            negate: false,
        }
    }

    /// `max(-expr, 0)`, so that `expr = positive_part - negative_part`.
    pub fn negative_part(&self) -> PartFn {
        PartFn {
            expr: self.clone(),
            negate: true,
        }
    }

    /// Closed-form integral over `[s, t]` where the grammar admits one.
    /// Products and quotients fall through to adaptive quadrature.
    pub fn closed_integral(&self, s: f64, t: f64) -> Option<f64> {
        match self {
            CoefficientExpr::Const { value, .. } => Some(value * (t - s)),
            CoefficientExpr::Sin { amp, freq, phase } => {
                if *freq == 0.0 {
                    Some(amp * phase.sin() * (t - s))
                } else {
                    Some(-amp / freq * ((freq * t + phase).cos() - (freq * s + phase).cos()))
                }
            }
            CoefficientExpr::Cos { amp, freq, phase } => {
                if *freq == 0.0 {
                    Some(amp * phase.cos() * (t - s))
                } else {
                    Some(amp / freq * ((freq * t + phase).sin() - (freq * s + phase).sin()))
                }
            }
            CoefficientExpr::Poly { coeffs } => {
                let anti = |x: f64| {
                    let mut acc = 0.0;
                    for (k, &c) in coeffs.iter().enumerate().rev() {
                        acc = acc * x + c / (k as f64 + 1.0);
                    }
                    acc * x
                };
                Some(anti(t) - anti(s))
            }
            CoefficientExpr::PwConst { breaks, values } => {
                let (lo, hi, sign) = if s <= t { (s, t, 1.0) } else { (t, s, -1.0) };
                let mut acc = 0.0;
                let mut left = lo;
                for (i, &b) in breaks.iter().enumerate() {
                    if b <= lo {
                        continue;
                    }
                    if b >= hi {
                        break;
                    }
                    acc += values[i] * (b - left);
                    left = b;
                }
                let last_idx = breaks.partition_point(|&b| b < hi);
                acc += values[last_idx] * (hi - left);
                Some(sign * acc)
            }
            CoefficientExpr::Sum { args } => {
                let mut acc = 0.0;
                for a in args {
                    acc += a.closed_integral(s, t)?;
                }
                Some(acc)
            }
            CoefficientExpr::Scale { factor, arg } => Some(factor * arg.closed_integral(s, t)?),
            CoefficientExpr::Prod { .. } | CoefficientExpr::Quot { .. } => None,
        }
    }

    /// Exact range over `[lo, hi]` where the shape admits one.
    fn analytic_range(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        match self {
            CoefficientExpr::Const { value, .. } => Some((*value, *value)),
            CoefficientExpr::Sin { amp, freq, phase } => {
                Some(sin_range(*amp, *freq, *phase, lo, hi))
            }
            CoefficientExpr::Cos { amp, freq, phase } => {
                // cos x = sin(x + pi/2)
                Some(sin_range(
                    *amp,
                    *freq,
                    phase + std::f64::consts::FRAC_PI_2,
                    lo,
                    hi,
                ))
            }
            CoefficientExpr::Poly { coeffs } => poly_range(coeffs, lo, hi),
            CoefficientExpr::PwConst { breaks, values } => {
                // A piece matters when it overlaps (lo, hi) on a set of
                // positive length; endpoints alone do not count.
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for (i, &v) in values.iter().enumerate() {
                    let piece_lo = if i == 0 {
                        f64::NEG_INFINITY
                    } else {
                        breaks[i - 1]
                    };
                    let piece_hi = if i == breaks.len() {
                        f64::INFINITY
                    } else {
                        breaks[i]
                    };
                    if piece_lo < hi && piece_hi > lo {
                        min = min.min(v);
                        max = max.max(v);
                    }
                }
                Some((min, max))
            }
            CoefficientExpr::Scale { factor, arg } => {
                let (a, b) = arg.analytic_range(lo, hi)?;
                let (x, y) = (factor * a, factor * b);
                Some((x.min(y), x.max(y)))
            }
            CoefficientExpr::Sum { args } => {
                // Exact only when at most one term actually varies; otherwise
                // interval addition would overstate the range.
                let mut shift = 0.0;
                let mut varying: Option<(f64, f64)> = None;
                for a in args {
                    let (x, y) = a.analytic_range(lo, hi)?;
                    if x == y {
                        shift += x;
                    } else if varying.is_none() {
                        varying = Some((x, y));
                    } else {
                        return None;
                    }
                }
                let (x, y) = varying.unwrap_or((0.0, 0.0));
                Some((x + shift, y + shift))
            }
            CoefficientExpr::Prod { args } => {
                let mut factor = 1.0;
                let mut varying: Option<(f64, f64)> = None;
                for a in args {
                    let (x, y) = a.analytic_range(lo, hi)?;
                    if x == y {
                        factor *= x;
                    } else if varying.is_none() {
                        varying = Some((x, y));
                    } else {
                        return None;
                    }
                }
                let (x, y) = varying.unwrap_or((1.0, 1.0));
                let (p, q) = (factor * x, factor * y);
                Some((p.min(q), p.max(q)))
            }
            CoefficientExpr::Quot { .. } => None,
        }
    }

    /// Essential infimum and supremum over `[lo, hi]`.
    ///
    /// Uses closed-form range analysis when the shape allows it and falls
    /// back to dense sampling (at least `samples_per_unit` points per unit of
    /// time, floor 1000) otherwise. One-sided values at interior jumps are
    /// always included; the interval endpoints contribute their inward limit,
    /// matching essential bounds for step functions.
    pub fn ess_bounds(&self, lo: f64, hi: f64, samples_per_unit: f64) -> EssBounds {
        assert!(lo <= hi, "ess_bounds needs an ordered interval");
        if let Some((inf, sup)) = self.analytic_range(lo, hi) {
            return EssBounds {
                inf,
                sup,
                rigorous: true,
            };
        }
        let n = (((hi - lo) * samples_per_unit).ceil() as usize).clamp(1000, 20_000_000);
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let t = if i == n { hi } else { lo + i as f64 * h };
            let side = if i == n { Side::Left } else { Side::Right };
            let v = self.eval_side(t, side);
            inf = inf.min(v);
            sup = sup.max(v);
        }
        for b in self.breakpoints_in(lo, hi) {
            for side in [Side::Left, Side::Right] {
                let v = self.eval_side(b, side);
                inf = inf.min(v);
                sup = sup.max(v);
            }
        }
        EssBounds {
            inf,
            sup,
            rigorous: false,
        }
    }

    /// Check `|expr(t + omega) - expr(t)| <= 1e-9 * (1 + |expr(t)|)` on a
    /// uniform grid of `samples` points covering `[0, 2 omega]`, skipping
    /// grid points that land on a jump.
    pub fn validate_period(&self, omega: f64, samples: usize) -> bool {
        assert!(omega > 0.0 && samples >= 2);
        let breaks = self.breakpoints_in(-1.0, 3.0 * omega);
        let is_break = |t: f64| breaks.iter().any(|&b| b == t);
        for i in 0..samples {
            let t = 2.0 * omega * i as f64 / samples as f64;
            if is_break(t) || is_break(t + omega) {
                continue;
            }
            let here = match self.eval(t) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let there = match self.eval(t + omega) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if (there - here).abs() > 1e-9 * (1.0 + here.abs()) {
                return false;
            }
        }
        true
    }

    /// Structural validation: finite parameters, non-empty polynomials,
    /// strictly increasing jump locations, matching lengths.
    pub fn validate(&self) -> Result<(), ExprError> {
        let fin = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(ExprError::Invalid(format!("{what} must be finite")))
            }
        };
        match self {
            CoefficientExpr::Const { value, .. } => fin(*value, "const value"),
            CoefficientExpr::Sin { amp, freq, phase } | CoefficientExpr::Cos { amp, freq, phase } => {
                fin(*amp, "amplitude")?;
                fin(*freq, "frequency")?;
                fin(*phase, "phase")
            }
            CoefficientExpr::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(ExprError::Invalid("poly needs at least one coefficient".into()));
                }
                for &c in coeffs {
                    fin(c, "poly coefficient")?;
                }
                Ok(())
            }
            CoefficientExpr::PwConst { breaks, values } => {
                if breaks.is_empty() {
                    return Err(ExprError::Invalid("pw_const needs at least one break".into()));
                }
                if values.len() != breaks.len() + 1 {
                    return Err(ExprError::Invalid(
                        "pw_const needs exactly one more value than breaks".into(),
                    ));
                }
                for &b in breaks {
                    fin(b, "break")?;
                }
                for &v in values {
                    fin(v, "value")?;
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ExprError::Invalid(
                        "pw_const breaks must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            CoefficientExpr::Sum { args } | CoefficientExpr::Prod { args } => {
                if args.len() < 2 {
                    return Err(ExprError::Invalid("sum/prod need at least two arguments".into()));
                }
                for a in args {
                    a.validate()?;
                }
                Ok(())
            }
            CoefficientExpr::Quot { num, den } => {
                num.validate()?;
                den.validate()
            }
            CoefficientExpr::Scale { factor, arg } => {
                fin(*factor, "scale factor")?;
                arg.validate()
            }
        }
    }

    /// Replace every named constant called `name` with `value`.
    pub fn substitute_named(&self, name: &str, value: f64) -> CoefficientExpr {
        match self {
            CoefficientExpr::Const { name: Some(n), .. } if n == name => CoefficientExpr::Const {
                value,
                name: Some(name.to_string()),
            },
            CoefficientExpr::Sum { args } => CoefficientExpr::Sum {
                args: args.iter().map(|a| a.substitute_named(name, value)).collect(),
            },
            CoefficientExpr::Prod { args } => CoefficientExpr::Prod {
                args: args.iter().map(|a| a.substitute_named(name, value)).collect(),
            },
            CoefficientExpr::Quot { num, den } => CoefficientExpr::Quot {
                num: Box::new(num.substitute_named(name, value)),
                den: Box::new(den.substitute_named(name, value)),
            },
            CoefficientExpr::Scale { factor, arg } => CoefficientExpr::Scale {
                factor: *factor,
                arg: Box::new(arg.substitute_named(name, value)),
            },
            other => other.clone(),
        }
    }

    /// How many named constants called `name` occur in the tree.
    pub fn named_const_count(&self, name: &str) -> usize {
        match self {
            CoefficientExpr::Const { name: Some(n), .. } if n == name => 1,
            CoefficientExpr::Sum { args } | CoefficientExpr::Prod { args } => {
                args.iter().map(|a| a.named_const_count(name)).sum()
            }
            CoefficientExpr::Quot { num, den } => {
                num.named_const_count(name) + den.named_const_count(name)
            }
            CoefficientExpr::Scale { arg, .. } => arg.named_const_count(name),
            _ => 0,
        }
    }
}

/// Positive or negative part of an expression, evaluable but outside the
/// expression grammar itself.
#[derive(Debug, Clone)]
pub struct PartFn {
    expr: CoefficientExpr,
    negate: bool,
}

impl PartFn {
    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        let v = self.expr.eval_side(t, side);
        if self.negate {
            (-v).max(0.0)
        } else {
            v.max(0.0)
        }
    }

    /// Jumps of the underlying expression; the clamp at zero introduces kinks
    /// but no new jumps, and the adaptive quadrature absorbs kinks.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.expr.breakpoints_in(lo, hi)
    }
}

/// Range of `amp * sin(freq t + phase)` for `t` in `[lo, hi]`.
fn sin_range(amp: f64, freq: f64, phase: f64, lo: f64, hi: f64) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, TAU};
    if freq == 0.0 || lo == hi {
        let v = amp * (freq * lo + phase).sin();
        return (v, v);
    }
    let (th0, th1) = {
        let a = freq * lo + phase;
        let b = freq * hi + phase;
        (a.min(b), a.max(b))
    };
    let mut min = (th0.sin()).min(th1.sin());
    let mut max = (th0.sin()).max(th1.sin());
    if angle_in(th0, th1, FRAC_PI_2, TAU) {
        max = 1.0;
    }
    if angle_in(th0, th1, -FRAC_PI_2, TAU) {
        min = -1.0;
    }
    let (x, y) = (amp * min, amp * max);
    (x.min(y), x.max(y))
}

/// Does any `target + k * period` fall inside `[lo, hi]`?
fn angle_in(lo: f64, hi: f64, target: f64, period: f64) -> bool {
    ((lo - target) / period).ceil() <= ((hi - target) / period).floor()
}

/// Exact polynomial range for degree at most two.
fn poly_range(coeffs: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let eval = |x: f64| {
        let mut acc = 0.0;
        for &c in coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    let deg = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    match deg {
        0 => {
            let v = coeffs.first().copied().unwrap_or(0.0);
            Some((v, v))
        }
        1 => {
            let (a, b) = (eval(lo), eval(hi));
            Some((a.min(b), a.max(b)))
        }
        2 => {
            let mut min = eval(lo).min(eval(hi));
            let mut max = eval(lo).max(eval(hi));
            let vertex = -coeffs[1] / (2.0 * coeffs[2]);
            if vertex > lo && vertex < hi {
                let v = eval(vertex);
                min = min.min(v);
                max = max.max(v);
            }
            Some((min, max))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn step() -> CoefficientExpr {
        CoefficientExpr::PwConst {
            breaks: vec![1.0, 2.5],
            values: vec![3.0, -1.0, 4.0],
        }
    }

    #[test]
    fn step_is_right_continuous() {
        let s = step();
        assert_eq!(s.eval(0.5).unwrap(), 3.0);
        assert_eq!(s.eval(1.5).unwrap(), -1.0);
        assert_eq!(s.eval(3.0).unwrap(), 4.0);
        assert!(matches!(s.eval(1.0), Err(ExprError::AtBreakpoint { .. })));
        assert_eq!(s.eval_side(1.0, Side::Left), 3.0);
        assert_eq!(s.eval_side(1.0, Side::Right), -1.0);
        assert_eq!(s.eval_side(2.5, Side::Left), -1.0);
        assert_eq!(s.eval_side(2.5, Side::Right), 4.0);
    }

    #[test]
    fn step_integral_is_exact() {
        let s = step();
        // 3 on [0,1), -1 on [1,2.5), 4 on [2.5,3]
        assert_relative_eq!(s.closed_integral(0.0, 3.0).unwrap(), 3.0 - 1.5 + 2.0);
        assert_relative_eq!(s.closed_integral(1.0, 2.0).unwrap(), -1.0);
        assert_relative_eq!(
            s.closed_integral(3.0, 0.0).unwrap(),
            -(3.0 - 1.5 + 2.0)
        );
    }

    #[test]
    fn poly_eval_and_derivative() {
        let p = CoefficientExpr::Poly {
            coeffs: vec![1.0, -2.0, 0.5],
        };
        assert_relative_eq!(p.eval(2.0).unwrap(), 1.0 - 4.0 + 2.0);
        let d = p.derivative();
        assert_relative_eq!(d.eval(2.0).unwrap(), -2.0 + 2.0 * 0.5 * 2.0);
        assert_relative_eq!(
            p.closed_integral(0.0, 2.0).unwrap(),
            2.0 - 4.0 + 0.5 * 8.0 / 3.0
        );
    }

    #[test]
    fn product_rule_matches_finite_differences() {
        let e = CoefficientExpr::Prod {
            args: vec![
                CoefficientExpr::Sin {
                    amp: 2.0,
                    freq: 1.5,
                    phase: 0.3,
                },
                CoefficientExpr::Poly {
                    coeffs: vec![1.0, 1.0],
                },
            ],
        };
        let d = e.derivative();
        let h = 1e-6;
        for &t in &[0.0, 0.7, 2.0] {
            let fd = (e.eval(t + h).unwrap() - e.eval(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(d.eval(t).unwrap(), fd, max_relative = 1e-8, epsilon = 1e-8);
        }
    }

    #[test]
    fn quotient_rule_matches_finite_differences() {
        let e = CoefficientExpr::Quot {
            num: Box::new(CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            }),
            den: Box::new(CoefficientExpr::Poly {
                coeffs: vec![2.0, 0.0, 1.0],
            }),
        };
        let d = e.derivative();
        let h = 1e-6;
        for &t in &[0.0, 1.1, 3.0] {
            let fd = (e.eval(t + h).unwrap() - e.eval(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(d.eval(t).unwrap(), fd, max_relative = 1e-7, epsilon = 1e-8);
        }
    }

    #[test]
    fn sinusoid_bounds_are_exact() {
        let s = CoefficientExpr::Sin {
            amp: -2.0,
            freq: 1.0,
            phase: 0.0,
        };
        // Over [0, pi/2] sin spans [0, 1], so -2 sin spans [-2, 0].
        let b = s.ess_bounds(0.0, std::f64::consts::FRAC_PI_2, 100.0);
        assert!(b.rigorous);
        assert_relative_eq!(b.inf, -2.0);
        assert_relative_eq!(b.sup, 0.0);
        // A full period always spans [-|amp|, |amp|].
        let b = s.ess_bounds(10.0, 10.0 + std::f64::consts::TAU, 100.0);
        assert_relative_eq!(b.inf, -2.0);
        assert_relative_eq!(b.sup, 2.0);
    }

    #[test]
    fn shifted_sinusoid_bounds() {
        // 10 + 0.5 sin t over a window without the extremes.
        let e = CoefficientExpr::Sum {
            args: vec![
                CoefficientExpr::constant(10.0),
                CoefficientExpr::Sin {
                    amp: 0.5,
                    freq: 1.0,
                    phase: 0.0,
                },
            ],
        };
        let b = e.ess_bounds(0.0, 1.0, 100.0);
        assert!(b.rigorous);
        assert_relative_eq!(b.inf, 10.0);
        assert_relative_eq!(b.sup, 10.0 + 0.5 * 1.0_f64.sin());
    }

    #[test]
    fn quadratic_bounds_include_vertex() {
        let p = CoefficientExpr::Poly {
            coeffs: vec![1.0, -2.0, 1.0],
        };
        let b = p.ess_bounds(0.0, 3.0, 100.0);
        assert!(b.rigorous);
        assert_relative_eq!(b.inf, 0.0);
        assert_relative_eq!(b.sup, 4.0);
    }

    #[test]
    fn step_bounds_use_overlapping_pieces_only() {
        let s = step();
        let b = s.ess_bounds(1.2, 2.0, 100.0);
        assert!(b.rigorous);
        assert_eq!((b.inf, b.sup), (-1.0, -1.0));
        let b = s.ess_bounds(0.0, 3.0, 100.0);
        assert_eq!((b.inf, b.sup), (-1.0, 4.0));
    }

    #[test]
    fn quotient_bounds_fall_back_to_sampling() {
        let e = CoefficientExpr::Quot {
            num: Box::new(CoefficientExpr::constant(1.0)),
            den: Box::new(CoefficientExpr::Poly {
                coeffs: vec![1.0, 1.0],
            }),
        };
        let b = e.ess_bounds(0.0, 1.0, 10_000.0);
        assert!(!b.rigorous);
        assert_relative_eq!(b.sup, 1.0, max_relative = 1e-6);
        assert_relative_eq!(b.inf, 0.5, max_relative = 1e-6);
    }

    #[test]
    fn positive_part_splits_cleanly() {
        let s = CoefficientExpr::Sin {
            amp: 1.0,
            freq: 1.0,
            phase: 0.0,
        };
        let plus = s.positive_part();
        let minus = s.negative_part();
        for i in 0..100 {
            let t = i as f64 * 0.1;
            let v = s.eval(t).unwrap();
            let p = plus.eval_side(t, Side::Right);
            let m = minus.eval_side(t, Side::Right);
            assert!(p >= 0.0 && m >= 0.0);
            assert_relative_eq!(p - m, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn validate_period_accepts_true_period_only() {
        let s = CoefficientExpr::Sin {
            amp: 1.0,
            freq: 2.0,
            phase: 0.1,
        };
        assert!(s.validate_period(std::f64::consts::PI, 64));
        assert!(!s.validate_period(1.5, 64));
    }

    #[test]
    fn named_substitution_hits_every_occurrence() {
        let e = CoefficientExpr::Sum {
            args: vec![
                CoefficientExpr::Const {
                    value: 2.0,
                    name: Some("gamma".into()),
                },
                CoefficientExpr::Scale {
                    factor: 3.0,
                    arg: Box::new(CoefficientExpr::Const {
                        value: 2.0,
                        name: Some("gamma".into()),
                    }),
                },
            ],
        };
        assert_eq!(e.named_const_count("gamma"), 2);
        let swapped = e.substitute_named("gamma", 5.0);
        assert_relative_eq!(swapped.eval(0.0).unwrap(), 5.0 + 15.0);
    }

    #[test]
    fn malformed_shapes_are_rejected() {
        assert!(CoefficientExpr::Poly { coeffs: vec![] }.validate().is_err());
        assert!(CoefficientExpr::PwConst {
            breaks: vec![2.0, 1.0],
            values: vec![0.0, 1.0, 2.0],
        }
        .validate()
        .is_err());
        assert!(CoefficientExpr::PwConst {
            breaks: vec![1.0],
            values: vec![0.0],
        }
        .validate()
        .is_err());
        assert!(CoefficientExpr::constant(f64::NAN).validate().is_err());
    }
}
