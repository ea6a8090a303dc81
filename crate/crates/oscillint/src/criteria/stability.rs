//! Certifiers whose passing claim is exponential stability: the composite
//! positivity-plus-bounds test, the tail liminf/limsup test, and the two
//! perturbation-from-a-constant-equation tests.

use super::{
    array_density, lemma2_bounds, positivity, sample_coeffs, Certificate, CertifyConfig,
    CertifyError, Claim, Verdict, Window, NONSTRICT_SLACK,
};
use crate::equation::EquationSpec;
use crate::search::planar_min;
use std::collections::BTreeMap;

fn tail_from(eq: &EquationSpec, t0: f64, cfg: &CertifyConfig) -> Window {
    match eq.period {
        Some(w) => Window {
            lo: t0,
            hi: t0 + w,
            periodic: true,
        },
        None => Window {
            lo: t0 + 0.5 * cfg.search_t,
            hi: t0 + cfg.search_t,
            periodic: false,
        },
    }
}

/// Exponential stability by combining a positivity certificate with both
/// coefficients bounded away from zero on the tail. The positivity leg is
/// delegated: the pointwise conditions first, the tail corollary second.
pub fn cert_thm6(eq: &EquationSpec, cfg: &CertifyConfig) -> Result<Certificate, CertifyError> {
    let window = tail_from(eq, eq.t_start, cfg);
    let alpha = eq
        .a
        .ess_bounds(window.lo, window.hi, cfg.samples_per_unit)
        .inf;
    let beta = eq
        .b
        .ess_bounds(window.lo, window.hi, cfg.samples_per_unit)
        .inf;
    let mut witnesses = BTreeMap::new();
    witnesses.insert("alpha".into(), alpha);
    witnesses.insert("beta".into(), beta);
    let paper_ref = "exponential stability from positivity of the fundamental kernel together \
                     with damping and restoring coefficients bounded below by positive constants";
    if alpha < cfg.strict_margin || beta < cfg.strict_margin {
        return Ok(Certificate {
            criterion: "T6".into(),
            verdict: Verdict::Inapplicable,
            claim: Claim::ExpStable,
            witnesses,
            margin: 0.0,
            window,
            paper_ref,
        });
    }
    let t3 = positivity::cert_thm3(eq, eq.t_start, cfg.horizon, cfg)?;
    let positive = if t3.verdict == Verdict::Pass {
        Some(t3)
    } else {
        let c7 = positivity::cert_cor7(eq, cfg.search_t, cfg)?;
        if c7.verdict == Verdict::Pass {
            Some(c7)
        } else {
            witnesses.insert("margin_positivity".into(), t3.margin.max(c7.margin));
            None
        }
    };
    match positive {
        Some(leg) => {
            witnesses.insert("via".into(), via_code(&leg.criterion));
            Ok(Certificate {
                criterion: "T6".into(),
                verdict: Verdict::Pass,
                claim: Claim::ExpStable,
                witnesses,
                margin: alpha.min(beta),
                window,
                paper_ref,
            })
        }
        None => Ok(Certificate {
            criterion: "T6".into(),
            verdict: Verdict::Fail,
            claim: Claim::ExpStable,
            margin: witnesses["margin_positivity"],
            witnesses,
            window,
            paper_ref,
        }),
    }
}

/// Encodes a delegated criterion id like T3_2 or C7_1 as family.condition.
fn via_code(criterion: &str) -> f64 {
    let family = if criterion.starts_with("T3") { 3.0 } else { 7.0 };
    let cond = criterion
        .rsplit('_')
        .next()
        .and_then(|d| d.parse::<f64>().ok())
        .unwrap_or(0.0);
    family + cond / 10.0
}

/// Exponential stability from tail bounds alone: liminf a = alpha > 0 and
/// 0 < liminf b <= limsup b < alpha^2 / 2.
pub fn cert_thm7(
    eq: &EquationSpec,
    search_t: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let t0 = eq.t_start;
    let window = match eq.period {
        Some(w) => Window {
            lo: t0,
            hi: t0 + w,
            periodic: true,
        },
        None => Window {
            lo: t0 + 0.5 * search_t,
            hi: t0 + search_t,
            periodic: false,
        },
    };
    let alpha = eq
        .a
        .ess_bounds(window.lo, window.hi, cfg.samples_per_unit)
        .inf;
    let rb = eq.b.ess_bounds(window.lo, window.hi, cfg.samples_per_unit);
    let (beta, cap_b) = (rb.inf, rb.sup);
    let margin = alpha.min(beta).min(0.5 * alpha * alpha - cap_b);
    let pass = margin >= cfg.strict_margin;
    let mut witnesses = BTreeMap::new();
    witnesses.insert("alpha".into(), alpha);
    witnesses.insert("beta".into(), beta);
    witnesses.insert("cap_b".into(), cap_b);
    if alpha >= cfg.strict_margin {
        let eps = (4.0 * beta / (alpha * alpha)).min(2.0 - 4.0 * cap_b / (alpha * alpha));
        witnesses.insert("epsilon".into(), eps);
    }
    Ok(Certificate {
        criterion: "T7".into(),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        claim: Claim::ExpStable,
        witnesses,
        margin,
        window,
        paper_ref: "exponential stability when, on the tail, the damping stays above a positive \
                    alpha and b stays between positive bounds with sup b < alpha^2 / 2",
    })
}

/// Margin details of the comparison-to-constants test at one witness pair.
#[derive(Debug, Clone, Copy)]
pub struct Thm8Margin {
    pub margin: f64,
    pub norm_dev_a: f64,
    pub norm_dev_b: f64,
    pub norm_b_over_a: f64,
    pub rhs: f64,
}

struct Thm8Data {
    inf_a: f64,
    sup_a: f64,
    inf_b: f64,
    sup_b: f64,
    b_over_a: f64,
}

impl Thm8Data {
    fn gather(eq: &EquationSpec, t0: f64, cfg: &CertifyConfig) -> (Window, Thm8Data) {
        let window = tail_from(eq, t0, cfg);
        let ra = eq
            .a
            .ess_bounds(window.lo, window.hi, cfg.samples_per_unit);
        let rb = eq
            .b
            .ess_bounds(window.lo, window.hi, cfg.samples_per_unit);
        let samples = sample_coeffs(eq, &window, array_density(&window, cfg));
        let mut q = 0.0_f64;
        for i in 0..samples.len() {
            q = q.max((samples.b[i] / samples.a[i]).abs());
        }
        (
            window,
            Thm8Data {
                inf_a: ra.inf,
                sup_a: ra.sup,
                inf_b: rb.inf,
                sup_b: rb.sup,
                b_over_a: q,
            },
        )
    }

    fn parts(&self, a_const: f64, b_const: f64) -> Thm8Margin {
        let norm_dev_a = (self.sup_a - a_const).max(a_const - self.inf_a);
        let norm_dev_b = (self.sup_b - b_const).max(b_const - self.inf_b);
        let rhs = if a_const * a_const >= 4.0 * b_const {
            b_const
        } else {
            a_const * (4.0 * b_const - a_const * a_const).sqrt() / 4.0
        };
        Thm8Margin {
            margin: rhs - (norm_dev_a * self.b_over_a + norm_dev_b),
            norm_dev_a,
            norm_dev_b,
            norm_b_over_a: self.b_over_a,
            rhs,
        }
    }
}

/// Margin of the comparison-to-constants stability test at a fixed constant
/// pair (A, B), without searching.
pub fn thm8_margin_at(
    eq: &EquationSpec,
    t0: f64,
    a_const: f64,
    b_const: f64,
    cfg: &CertifyConfig,
) -> Result<Thm8Margin, CertifyError> {
    if !(a_const > 0.0 && b_const > 0.0) {
        return Err(CertifyError::NonpositiveConstants {
            a: a_const,
            b: b_const,
        });
    }
    let (_, data) = Thm8Data::gather(eq, t0, cfg);
    Ok(data.parts(a_const, b_const))
}

/// Exponential stability by comparison with a constant-coefficient
/// equation: the weighted coefficient deviations must stay below a reserve
/// determined by the constant pair. The pair is searched from the middle of
/// the coefficient ranges.
pub fn cert_thm8(
    eq: &EquationSpec,
    t0: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let (window, data) = Thm8Data::gather(eq, t0, cfg);
    let paper_ref = "exponential stability when the sup-norm deviations of the coefficients from \
                     a stable constant pair (A, B), weighted by sup |b/a|, stay below the reserve \
                     of the constant equation";
    let mut witnesses = BTreeMap::new();
    if data.inf_a < cfg.strict_margin || data.inf_b < -NONSTRICT_SLACK {
        witnesses.insert("inf_a".into(), data.inf_a);
        witnesses.insert("inf_b".into(), data.inf_b);
        return Ok(Certificate {
            criterion: "T8".into(),
            verdict: Verdict::Inapplicable,
            claim: Claim::ExpStable,
            witnesses,
            margin: 0.0,
            window,
            paper_ref,
        });
    }
    let center = (
        0.5 * (data.inf_a + data.sup_a),
        0.5 * (data.inf_b + data.sup_b),
    );
    let scale = (
        0.5 * (data.sup_a - data.inf_a) + 0.1 * (1.0 + center.0.abs()),
        0.5 * (data.sup_b - data.inf_b) + 0.1 * (1.0 + center.1.abs()),
    );
    let objective = |a_const: f64, b_const: f64| {
        if a_const > 0.0 && b_const > 0.0 {
            -data.parts(a_const, b_const).margin
        } else {
            f64::INFINITY
        }
    };
    let ((a_best, b_best), neg_margin) = planar_min(objective, center, scale, 300);
    let best = data.parts(a_best, b_best);
    debug_assert_eq!(best.margin, -neg_margin);
    let pass = best.margin >= cfg.strict_margin;
    witnesses.insert("A".into(), a_best);
    witnesses.insert("B".into(), b_best);
    witnesses.insert("norm_dev_a".into(), best.norm_dev_a);
    witnesses.insert("norm_dev_b".into(), best.norm_dev_b);
    witnesses.insert("norm_b_over_a".into(), best.norm_b_over_a);
    witnesses.insert("rhs".into(), best.rhs);
    Ok(Certificate {
        criterion: "T8".into(),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        claim: Claim::ExpStable,
        witnesses,
        margin: best.margin,
        window,
        paper_ref,
    })
}

/// Margin details of the kernel-bound perturbation test at one witness pair.
#[derive(Debug, Clone, Copy)]
pub struct Thm9Margin {
    pub margin: f64,
    pub norm_dev_a: f64,
    pub norm_dev_b: f64,
    pub k0: f64,
    pub k1: f64,
    pub case: u8,
}

struct Thm9Data {
    inf_a: f64,
    sup_a: f64,
    inf_b: f64,
    sup_b: f64,
}

impl Thm9Data {
    fn gather(eq: &EquationSpec, t0: f64, cfg: &CertifyConfig) -> (Window, Thm9Data) {
        let window = tail_from(eq, t0, cfg);
        let ra = eq
            .a
            .ess_bounds(window.lo, window.hi, cfg.samples_per_unit);
        let rb = eq
            .b
            .ess_bounds(window.lo, window.hi, cfg.samples_per_unit);
        (
            window,
            Thm9Data {
                inf_a: ra.inf,
                sup_a: ra.sup,
                inf_b: rb.inf,
                sup_b: rb.sup,
            },
        )
    }

    fn parts(&self, a_const: f64, b_const: f64) -> Result<Thm9Margin, CertifyError> {
        let bounds = lemma2_bounds(a_const, b_const)?;
        let norm_dev_a = (self.sup_a - a_const).max(a_const - self.inf_a);
        let norm_dev_b = (self.sup_b - b_const).max(b_const - self.inf_b);
        let disc = a_const * a_const - 4.0 * b_const;
        let case = if disc.abs() <= 1e-12 * (a_const * a_const).max(1.0) {
            3
        } else if disc > 0.0 {
            1
        } else {
            2
        };
        Ok(Thm9Margin {
            margin: 1.0 - (norm_dev_a * bounds.k1 + norm_dev_b * bounds.k0),
            norm_dev_a,
            norm_dev_b,
            k0: bounds.k0,
            k1: bounds.k1,
            case,
        })
    }
}

/// Margin of the kernel-bound perturbation test at a fixed constant pair
/// (a, b), without searching.
pub fn thm9_margin_at(
    eq: &EquationSpec,
    t0: f64,
    a_const: f64,
    b_const: f64,
    cfg: &CertifyConfig,
) -> Result<Thm9Margin, CertifyError> {
    let (_, data) = Thm9Data::gather(eq, t0, cfg);
    data.parts(a_const, b_const)
}

/// Exponential stability by perturbation from a constant pair (a, b): the
/// coefficient deviations weighted by the kernel integral bounds K1 and K0
/// must sum below one. The criterion id records which discriminant case the
/// best pair landed in.
pub fn cert_thm9(
    eq: &EquationSpec,
    t0: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let (window, data) = Thm9Data::gather(eq, t0, cfg);
    let paper_ref = "exponential stability when coefficient deviations from a stable constant \
                     pair, weighted by the kernel integral bounds K0 and K1, sum below one";
    let mut witnesses = BTreeMap::new();
    if data.inf_a < cfg.strict_margin || data.inf_b < -NONSTRICT_SLACK {
        witnesses.insert("inf_a".into(), data.inf_a);
        witnesses.insert("inf_b".into(), data.inf_b);
        return Ok(Certificate {
            criterion: "T9".into(),
            verdict: Verdict::Inapplicable,
            claim: Claim::ExpStable,
            witnesses,
            margin: 0.0,
            window,
            paper_ref,
        });
    }
    let center = (
        0.5 * (data.inf_a + data.sup_a),
        0.5 * (data.inf_b + data.sup_b),
    );
    let scale = (
        0.5 * (data.sup_a - data.inf_a) + 0.1 * (1.0 + center.0.abs()),
        0.5 * (data.sup_b - data.inf_b) + 0.1 * (1.0 + center.1.abs()),
    );
    let objective = |a_const: f64, b_const: f64| match data.parts(a_const, b_const) {
        Ok(m) => -m.margin,
        Err(_) => f64::INFINITY,
    };
    let ((a_best, b_best), _) = planar_min(objective, center, scale, 300);
    let best = data.parts(a_best, b_best)?;
    let pass = best.margin >= cfg.strict_margin;
    witnesses.insert("a".into(), a_best);
    witnesses.insert("b".into(), b_best);
    witnesses.insert("k0".into(), best.k0);
    witnesses.insert("k1".into(), best.k1);
    witnesses.insert("norm_dev_a".into(), best.norm_dev_a);
    witnesses.insert("norm_dev_b".into(), best.norm_dev_b);
    Ok(Certificate {
        criterion: format!("T9_{}", best.case),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        claim: Claim::ExpStable,
        witnesses,
        margin: best.margin,
        window,
        paper_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::CoefficientExpr;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn shifted_sin(base: f64, amp: f64) -> CoefficientExpr {
        CoefficientExpr::Sum {
            args: vec![
                CoefficientExpr::constant(base),
                CoefficientExpr::Sin {
                    amp,
                    freq: 1.0,
                    phase: 0.0,
                },
            ],
        }
    }

    fn shifted_cos(base: f64, amp: f64) -> CoefficientExpr {
        CoefficientExpr::Sum {
            args: vec![
                CoefficientExpr::constant(base),
                CoefficientExpr::Cos {
                    amp,
                    freq: 1.0,
                    phase: 0.0,
                },
            ],
        }
    }

    fn strong_forcing(a: f64) -> EquationSpec {
        EquationSpec::new(CoefficientExpr::constant(a), shifted_sin(1.0, 0.99)).with_period(TAU)
    }

    #[test]
    fn composite_test_certifies_constant_coefficients() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let cert = cert_thm6(&eq, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert_relative_eq!(cert.margin, 2.0);
        assert_relative_eq!(cert.witnesses["via"], 3.2);
    }

    #[test]
    fn composite_test_requires_positive_lower_bounds() {
        let eq = EquationSpec::constant(0.0, 1.0);
        let cert = cert_thm6(&eq, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inapplicable);
    }

    #[test]
    fn composite_test_fails_without_a_positivity_leg() {
        let eq = EquationSpec::constant(1.0, 1.0);
        let cert = cert_thm6(&eq, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.margin < 0.0);
    }

    #[test]
    fn tail_bounds_certify_strong_damping() {
        let cert = cert_thm7(&strong_forcing(2.0), 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert_relative_eq!(cert.margin, 0.01, max_relative = 1e-9);
        assert_relative_eq!(cert.witnesses["alpha"], 2.0);
        assert_relative_eq!(cert.witnesses["beta"], 0.01, max_relative = 1e-9);
        assert_relative_eq!(cert.witnesses["cap_b"], 1.99);
        assert_relative_eq!(cert.witnesses["epsilon"], 0.01, max_relative = 1e-9);
    }

    #[test]
    fn tail_bounds_reject_damping_below_the_threshold() {
        let cert = cert_thm7(&strong_forcing(1.9), 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_relative_eq!(cert.margin, 0.5 * 1.9 * 1.9 - 1.99, max_relative = 1e-9);
    }

    #[test]
    fn tail_bounds_reject_vanishing_b() {
        let eq = EquationSpec::constant(2.0, 0.0);
        let cert = cert_thm7(&eq, 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_relative_eq!(cert.margin, 0.0);
    }

    fn two_tone() -> EquationSpec {
        EquationSpec::new(shifted_sin(10.0, 1.0), shifted_cos(26.0, 1.0)).with_period(TAU)
    }

    #[test]
    fn constant_comparison_margin_matches_the_closed_form() {
        let eq = two_tone();
        let m = thm8_margin_at(&eq, 0.0, 10.0, 26.0, &CertifyConfig::default()).unwrap();
        assert_relative_eq!(m.norm_dev_a, 1.0, max_relative = 1e-9);
        assert_relative_eq!(m.norm_dev_b, 1.0, max_relative = 1e-9);
        let q_exact = (520.0 + 3100.0_f64.sqrt()) / 198.0;
        assert_relative_eq!(m.norm_b_over_a, q_exact, max_relative = 1e-7);
        assert_relative_eq!(m.rhs, 5.0, max_relative = 1e-12);
        assert_relative_eq!(m.margin, 1.0925371533924233, max_relative = 1e-7);
    }

    #[test]
    fn constant_comparison_search_does_at_least_as_well_as_the_center() {
        let eq = two_tone();
        let cert = cert_thm8(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert!(cert.margin >= 1.0925, "margin {}", cert.margin);
    }

    #[test]
    fn constant_comparison_margin_is_negative_at_a_poor_witness() {
        let eq = EquationSpec::new(CoefficientExpr::constant(10.0), shifted_cos(26.0, 6.0))
            .with_period(TAU);
        let m = thm8_margin_at(&eq, 0.0, 10.0, 26.0, &CertifyConfig::default()).unwrap();
        assert_relative_eq!(m.norm_dev_b, 6.0, max_relative = 1e-9);
        assert_relative_eq!(m.margin, -1.0, max_relative = 1e-7);
    }

    #[test]
    fn constant_comparison_for_constant_coefficients_keeps_the_full_reserve() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let cert = cert_thm8(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_relative_eq!(cert.margin, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn kernel_bound_test_passes_just_above_the_flip() {
        let eq = EquationSpec::new(CoefficientExpr::constant(1.0), shifted_sin(4.3, 1.0))
            .with_period(TAU);
        let cert = cert_thm9(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "T9_2");
        assert_relative_eq!(cert.margin, 1.0 - 4.0 / 16.2_f64.sqrt(), max_relative = 1e-4);
        assert_relative_eq!(cert.witnesses["a"], 1.0, epsilon = 1e-4);
        assert_relative_eq!(cert.witnesses["b"], 4.3, epsilon = 1e-3);
    }

    #[test]
    fn kernel_bound_test_fails_just_below_the_flip() {
        let eq = EquationSpec::new(CoefficientExpr::constant(1.0), shifted_sin(4.2, 1.0))
            .with_period(TAU);
        let cert = cert_thm9(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_relative_eq!(cert.margin, 1.0 - 4.0 / 15.8_f64.sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn kernel_bound_test_handles_oscillating_damping() {
        let eq = EquationSpec::new(shifted_sin(3.0, 0.1), CoefficientExpr::constant(2.0))
            .with_period(TAU);
        let cert = cert_thm9(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "T9_1");
        assert_relative_eq!(cert.margin, 0.7, max_relative = 1e-5);
    }

    #[test]
    fn kernel_bound_test_requires_nonnegative_b() {
        let eq = EquationSpec::constant(1.0, -0.5);
        let cert = cert_thm9(&eq, 0.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inapplicable);
    }

    #[test]
    fn margin_probe_rejects_nonpositive_constants() {
        let eq = EquationSpec::constant(3.0, 2.0);
        assert!(thm8_margin_at(&eq, 0.0, -1.0, 2.0, &CertifyConfig::default()).is_err());
        assert!(thm9_margin_at(&eq, 0.0, 1.0, 0.0, &CertifyConfig::default()).is_err());
    }
}
