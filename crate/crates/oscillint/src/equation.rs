//! The equation under study: x'' + a(t) x' + b(t) x = f(t).

use crate::expr::{CoefficientExpr, Side};
use crate::quad::QuadConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquationError {
    #[error("start time must be finite and nonnegative, got {0}")]
    BadStart(f64),
    #[error("period must be finite and positive, got {0}")]
    BadPeriod(f64),
    #[error("{which} does not repeat with the declared period {omega}")]
    NotPeriodic { which: &'static str, omega: f64 },
    #[error("quotient denominator in {which} comes within {min_abs} of zero near t = {t}")]
    SmallDenominator {
        which: &'static str,
        t: f64,
        min_abs: f64,
    },
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

/// A second-order scalar equation with optional forcing and optional declared
/// period. `t_start` is where certificates and trajectories begin.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub a: CoefficientExpr,
    pub b: CoefficientExpr,
    pub f: Option<CoefficientExpr>,
    pub t_start: f64,
    pub period: Option<f64>,
    pub label: String,
}

impl EquationSpec {
    pub fn new(a: CoefficientExpr, b: CoefficientExpr) -> Self {
        EquationSpec {
            a,
            b,
            f: None,
            t_start: 0.0,
            period: None,
            label: String::new(),
        }
    }

    /// Constant-coefficient equation x'' + a x' + b x = 0.
    pub fn constant(a: f64, b: f64) -> Self {
        EquationSpec::new(
            CoefficientExpr::constant(a),
            CoefficientExpr::constant(b),
        )
    }

    pub fn with_forcing(mut self, f: CoefficientExpr) -> Self {
        self.f = Some(f);
        self
    }

    pub fn with_period(mut self, omega: f64) -> Self {
        self.period = Some(omega);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Structural and semantic validation. `horizon` bounds the range over
    /// which quotient denominators are screened for zeros.
    pub fn validate(&self, horizon: f64) -> Result<(), EquationError> {
        if !self.t_start.is_finite() || self.t_start < 0.0 {
            return Err(EquationError::BadStart(self.t_start));
        }
        self.a.validate()?;
        self.b.validate()?;
        if let Some(f) = &self.f {
            f.validate()?;
        }
        if let Some(omega) = self.period {
            if !omega.is_finite() || omega <= 0.0 {
                return Err(EquationError::BadPeriod(omega));
            }
            if !self.a.validate_period(omega, 64) {
                return Err(EquationError::NotPeriodic {
                    which: "a",
                    omega,
                });
            }
            if !self.b.validate_period(omega, 64) {
                return Err(EquationError::NotPeriodic {
                    which: "b",
                    omega,
                });
            }
        }
        let hi = self.t_start + horizon.max(self.period.map_or(0.0, |w| 3.0 * w));
        check_denominators(&self.a, "a", self.t_start, hi)?;
        check_denominators(&self.b, "b", self.t_start, hi)?;
        if let Some(f) = &self.f {
            check_denominators(f, "f", self.t_start, hi)?;
        }
        Ok(())
    }

    /// Jumps of any coefficient inside `(lo, hi)`, merged and sorted.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = self.a.breakpoints_in(lo, hi);
        out.extend(self.b.breakpoints_in(lo, hi));
        if let Some(f) = &self.f {
            out.extend(f.breakpoints_in(lo, hi));
        }
        out.sort_unstable_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Integral of the damping coefficient, used by the Liouville route to
    /// the Wronskian.
    pub fn damping_integral(&self, s: f64, t: f64, cfg: &QuadConfig) -> Result<f64, crate::quad::QuadError> {
        crate::quad::integrate_expr(&self.a, s, t, cfg)
    }

    /// The reduced potential b - a^2/4 - a'/2 obtained by removing the
    /// damping term with the standard substitution. Meaningful only where
    /// the damping is differentiable.
    pub fn reduced_potential(&self) -> CoefficientExpr {
        CoefficientExpr::Sum {
            args: vec![
                self.b.clone(),
                CoefficientExpr::Scale {
                    factor: -0.25,
                    arg: Box::new(CoefficientExpr::Prod {
                        args: vec![self.a.clone(), self.a.clone()],
                    }),
                },
                CoefficientExpr::Scale {
                    factor: -0.5,
                    arg: Box::new(self.a.derivative()),
                },
            ],
        }
    }

    /// Replace named constants in every coefficient.
    pub fn substitute_named(&self, name: &str, value: f64) -> EquationSpec {
        EquationSpec {
            a: self.a.substitute_named(name, value),
            b: self.b.substitute_named(name, value),
            f: self.f.as_ref().map(|f| f.substitute_named(name, value)),
            t_start: self.t_start,
            period: self.period,
            label: self.label.clone(),
        }
    }

    pub fn named_const_count(&self, name: &str) -> usize {
        self.a.named_const_count(name)
            + self.b.named_const_count(name)
            + self.f.as_ref().map_or(0, |f| f.named_const_count(name))
    }
}

/// Scan every quotient denominator in the tree over `[lo, hi]` and reject
/// near-zeros. Sampling density is fixed; a denominator that vanishes only
/// between samples will surface later as a non-finite integration error.
fn check_denominators(
    expr: &CoefficientExpr,
    which: &'static str,
    lo: f64,
    hi: f64,
) -> Result<(), EquationError> {
    let mut dens: Vec<&CoefficientExpr> = Vec::new();
    collect_denominators(expr, &mut dens);
    if dens.is_empty() {
        return Ok(());
    }
    let n = (((hi - lo) * 256.0).ceil() as usize).clamp(1024, 4_000_000);
    for den in dens {
        let mut min_abs = f64::INFINITY;
        let mut min_t = lo;
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let v = den.eval_side(t, Side::Right).abs();
            if v < min_abs {
                min_abs = v;
                min_t = t;
            }
        }
        if min_abs < 1e-8 {
            return Err(EquationError::SmallDenominator {
                which,
                t: min_t,
                min_abs,
            });
        }
    }
    Ok(())
}

fn collect_denominators<'e>(expr: &'e CoefficientExpr, out: &mut Vec<&'e CoefficientExpr>) {
    match expr {
        CoefficientExpr::Quot { num, den } => {
            out.push(den);
            collect_denominators(num, out);
            collect_denominators(den, out);
        }
        CoefficientExpr::Sum { args } | CoefficientExpr::Prod { args } => {
            for a in args {
                collect_denominators(a, out);
            }
        }
        CoefficientExpr::Scale { arg, .. } => collect_denominators(arg, out),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_validation_rejects_wrong_period() {
        let eq = EquationSpec::new(
            CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
            CoefficientExpr::constant(1.0),
        )
        .with_period(std::f64::consts::TAU);
        assert!(eq.validate(10.0).is_ok());
        let wrong = EquationSpec::new(
            CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
            CoefficientExpr::constant(1.0),
        )
        .with_period(4.0);
        assert!(matches!(
            wrong.validate(10.0),
            Err(EquationError::NotPeriodic { which: "a", .. })
        ));
    }

    #[test]
    fn vanishing_denominator_is_rejected() {
        // 1/(t - 2) blows up inside the horizon.
        let eq = EquationSpec::new(
            CoefficientExpr::Quot {
                num: Box::new(CoefficientExpr::constant(1.0)),
                den: Box::new(CoefficientExpr::Poly {
                    coeffs: vec![-2.0, 1.0],
                }),
            },
            CoefficientExpr::constant(1.0),
        );
        assert!(matches!(
            eq.validate(10.0),
            Err(EquationError::SmallDenominator { which: "a", .. })
        ));
        assert!(eq.validate(1.0).is_ok());
    }

    #[test]
    fn negative_start_is_rejected() {
        let mut eq = EquationSpec::constant(1.0, 1.0);
        eq.t_start = -1.0;
        assert!(matches!(eq.validate(10.0), Err(EquationError::BadStart(_))));
    }
}
