//! Certifiers whose passing claim is nonoscillation with a positive
//! fundamental kernel: the quadratic test over a single shift, the
//! separated-root-range test, the three-condition pointwise test, its
//! tail-only corollary, and verification of a user-supplied witness.

use super::{
    array_density, max_of, min_of, sample_coeffs, scalar_ode_nodes, Certificate, CertifyConfig,
    CertifyError, Claim, Verdict, Window, HORIZON_GRID_PER_UNIT, NONSTRICT_SLACK,
};
use crate::equation::EquationSpec;
use crate::expr::{CoefficientExpr, PartFn, Side};
use crate::quad::{integrate_fn, QuadConfig};
use crate::search::{golden_min, positive_line_min};
use std::collections::BTreeMap;

/// Minimizes the essential supremum of l^2 + a(t) l + b(t) over the shift l;
/// a nonpositive minimum certifies nonoscillation, and a strictly negative
/// shift with strictly positive b upgrades the claim to exponential
/// stability.
pub fn cert_quadratic_lambda(
    eq: &EquationSpec,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let window = match eq.period {
        Some(w) => Window {
            lo: eq.t_start,
            hi: eq.t_start + w,
            periodic: true,
        },
        None => Window {
            lo: eq.t_start,
            hi: eq.t_start + horizon,
            periodic: false,
        },
    };
    let samples = sample_coeffs(eq, &window, array_density(&window, cfg));
    let scale_a = max_of(&samples.a).abs().max(min_of(&samples.a).abs());
    let scale_b = max_of(&samples.b).abs().max(min_of(&samples.b).abs());
    // Outside [-bound, bound] the quadratic term dominates and g exceeds g(0).
    let bound = 1.0 + 0.5 * scale_a + (0.25 * scale_a * scale_a + scale_b).sqrt();
    let g = |l: f64| {
        let mut sup = f64::NEG_INFINITY;
        for i in 0..samples.len() {
            sup = sup.max(l * l + samples.a[i] * l + samples.b[i]);
        }
        sup
    };
    let (l_star, g_min) = golden_min(g, -bound, bound, 200);
    let inf_b = min_of(&samples.b);
    let pass = g_min <= NONSTRICT_SLACK;
    let claim = if pass && l_star <= -cfg.strict_margin && inf_b >= cfg.strict_margin {
        Claim::ExpStable
    } else {
        Claim::NonoscillationPositivity
    };
    let mut witnesses = BTreeMap::new();
    witnesses.insert("lambda".into(), l_star);
    witnesses.insert("sup_quadratic".into(), g_min);
    witnesses.insert("inf_b".into(), inf_b);
    witnesses.insert("samples".into(), samples.len() as f64);
    Ok(Certificate {
        criterion: "C1".into(),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        claim,
        witnesses,
        margin: -g_min,
        window,
        paper_ref: "nonoscillation when some real shift lambda makes lambda^2 + a(t) lambda + b(t) \
                    nonpositive for almost every t",
    })
}

/// Checks that the pointwise characteristic roots stay real and split into
/// two strictly separated ranges; the upper range below zero upgrades the
/// claim to exponential stability.
pub fn cert_levin(
    eq: &EquationSpec,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let window = match eq.period {
        Some(w) => Window {
            lo: eq.t_start,
            hi: eq.t_start + w,
            periodic: true,
        },
        None => {
            let hi = eq.t_start + horizon;
            Window {
                lo: 0.5 * (eq.t_start + hi),
                hi,
                periodic: false,
            }
        }
    };
    let samples = sample_coeffs(eq, &window, array_density(&window, cfg));
    let mut min_disc = f64::INFINITY;
    for i in 0..samples.len() {
        min_disc = min_disc.min(0.25 * samples.a[i] * samples.a[i] - samples.b[i]);
    }
    let mut witnesses = BTreeMap::new();
    witnesses.insert("min_discriminant".into(), min_disc);
    witnesses.insert("samples".into(), samples.len() as f64);
    let paper_ref = "nonoscillation when a(t)^2/4 - b(t) >= 0 and the ranges of the two pointwise \
                     characteristic roots are separated by a constant";
    if min_disc < -NONSTRICT_SLACK {
        return Ok(Certificate {
            criterion: "C2_LEVIN".into(),
            verdict: Verdict::Inapplicable,
            claim: Claim::NonoscillationPositivity,
            witnesses,
            margin: 0.0,
            window,
            paper_ref,
        });
    }
    let mut lo_root_max = f64::NEG_INFINITY;
    let mut lo_root_min = f64::INFINITY;
    let mut hi_root_max = f64::NEG_INFINITY;
    let mut hi_root_min = f64::INFINITY;
    for i in 0..samples.len() {
        let half_a = 0.5 * samples.a[i];
        let s = (half_a * half_a - samples.b[i]).max(0.0).sqrt();
        let r1 = -half_a - s;
        let r2 = -half_a + s;
        lo_root_min = lo_root_min.min(r1);
        lo_root_max = lo_root_max.max(r1);
        hi_root_min = hi_root_min.min(r2);
        hi_root_max = hi_root_max.max(r2);
    }
    let gap = hi_root_min - lo_root_max;
    let pass = gap >= cfg.strict_margin;
    let claim = if pass && hi_root_max <= -cfg.strict_margin {
        Claim::ExpStable
    } else {
        Claim::NonoscillationPositivity
    };
    witnesses.insert("nu_0".into(), lo_root_min);
    witnesses.insert("nu_1".into(), 0.5 * (lo_root_max + hi_root_min));
    witnesses.insert("nu_2".into(), hi_root_max);
    Ok(Certificate {
        criterion: "C2_LEVIN".into(),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        claim,
        witnesses,
        margin: gap,
        window,
        paper_ref,
    })
}

/// Margin of the cumulative condition: min over the range of
/// a(t) - integral from t0 to t of the positive part of b.
pub(crate) fn condition1_margin(
    eq: &EquationSpec,
    t0: f64,
    t_end: f64,
    tol: f64,
) -> Result<f64, CertifyError> {
    let bp = eq.b.positive_part();
    let mut breaks = bp.breakpoints_in(t0, t_end);
    breaks.extend(eq.a.breakpoints_in(t0, t_end));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let rhs = |t: f64, _m: f64, side: Side| bp.eval_side(t, side);
    let nodes = scalar_ode_nodes(&rhs, t0, 0.0, t_end, &breaks, tol)?;
    let mut margin = f64::INFINITY;
    for &(t, m) in &nodes {
        let side = if t >= t_end { Side::Left } else { Side::Right };
        margin = margin.min(eq.a.eval_side(t, side) - m);
    }
    Ok(margin)
}

/// Setup for the auxiliary-solution condition: m' = source - (a - lambda) m
/// from zero, with the supremum of m taken past `sup_from`.
pub(crate) struct AuxCondition<'e> {
    pub eq: &'e EquationSpec,
    pub source: &'e PartFn,
    pub t0: f64,
    pub t_end: f64,
    pub sup_from: f64,
    pub tol: f64,
}

impl AuxCondition<'_> {
    /// Supremum of m - lambda over the recorded range; solver blow-up counts
    /// as an infinite excess.
    pub(crate) fn excess(&self, lambda: f64) -> f64 {
        let mut breaks = self.eq.a.breakpoints_in(self.t0, self.t_end);
        breaks.extend(self.source.breakpoints_in(self.t0, self.t_end));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let rhs = |t: f64, m: f64, side: Side| {
            self.source.eval_side(t, side) - (self.eq.a.eval_side(t, side) - lambda) * m
        };
        match scalar_ode_nodes(&rhs, self.t0, 0.0, self.t_end, &breaks, self.tol) {
            Ok(nodes) => nodes
                .iter()
                .filter(|&&(t, _)| t >= self.sup_from)
                .fold(f64::NEG_INFINITY, |s, &(_, m)| s.max(m - lambda)),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Three pointwise sufficient conditions for positivity on `[t0, t0 +
/// horizon]`, checked in order: damping dominates the cumulative positive
/// part of b; damping dominates lambda b+ + 1/lambda for some lambda; the
/// auxiliary integral solution stays below some lambda. The third condition
/// additionally needs nonnegative damping.
pub fn cert_thm3(
    eq: &EquationSpec,
    t0: f64,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let t_end = t0 + horizon;
    let window = Window {
        lo: t0,
        hi: t_end,
        periodic: false,
    };
    let samples = sample_coeffs(eq, &window, HORIZON_GRID_PER_UNIT);
    let mut witnesses = BTreeMap::new();
    witnesses.insert("samples".into(), samples.len() as f64);
    let paper_ref = "positivity of the fundamental kernel when the damping dominates the \
                     accumulated positive part of b, pointwise via a shift lambda, or through an \
                     auxiliary integral bound";
    let finish = |cond: u8, margin: f64, pass: bool, witnesses: BTreeMap<String, f64>| {
        Ok(Certificate {
            criterion: format!("T3_{cond}"),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            claim: Claim::NonoscillationPositivity,
            witnesses,
            margin,
            window,
            paper_ref,
        })
    };

    let margin_1 = condition1_margin(eq, t0, t_end, cfg.tol)?;
    witnesses.insert("margin_1".into(), margin_1);
    if margin_1 >= -NONSTRICT_SLACK {
        return finish(1, margin_1, true, witnesses);
    }

    let h = |l: f64| {
        let mut sup = f64::NEG_INFINITY;
        for i in 0..samples.len() {
            sup = sup.max(l * samples.b[i].max(0.0) + 1.0 / l - samples.a[i]);
        }
        sup
    };
    let (l2, h_min) = positive_line_min(h, -6.0, 6.0, 25, 200);
    let margin_2 = -h_min;
    witnesses.insert("lambda_2".into(), l2);
    witnesses.insert("margin_2".into(), margin_2);
    if margin_2 >= -NONSTRICT_SLACK {
        return finish(2, margin_2, true, witnesses);
    }

    let inf_a = min_of(&samples.a);
    witnesses.insert("inf_a".into(), inf_a);
    let mut margin_3 = f64::NEG_INFINITY;
    if inf_a >= -NONSTRICT_SLACK {
        let bp = eq.b.positive_part();
        let aux = AuxCondition {
            eq,
            source: &bp,
            t0,
            t_end,
            sup_from: t0,
            tol: cfg.tol,
        };
        let (l3, excess_min) = positive_line_min(|l| aux.excess(l), -6.0, 3.0, 19, 60);
        margin_3 = -excess_min;
        witnesses.insert("lambda_3".into(), l3);
        witnesses.insert("margin_3".into(), margin_3);
        if margin_3 >= -NONSTRICT_SLACK {
            return finish(3, margin_3, true, witnesses);
        }
    }

    let best = margin_1.max(margin_2).max(margin_3);
    let cond = if best == margin_1 {
        1
    } else if best == margin_2 {
        2
    } else {
        3
    };
    finish(cond, best, false, witnesses)
}

/// Tail analog of the pointwise conditions: positivity from some finite
/// time onward via a summable positive part of b, a tail bound a^2 >= 4B,
/// or the auxiliary solution staying strictly below lambda in the limit.
pub fn cert_cor7(
    eq: &EquationSpec,
    search_t: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let t0 = eq.t_start;
    let (window, span_end) = match eq.period {
        Some(w) => (
            Window {
                lo: t0,
                hi: t0 + w,
                periodic: true,
            },
            t0 + 50.0 * w,
        ),
        None => {
            let hi = t0 + search_t;
            (
                Window {
                    lo: 0.5 * (t0 + hi),
                    hi,
                    periodic: false,
                },
                hi,
            )
        }
    };
    let alpha = eq
        .a
        .ess_bounds(window.lo, window.hi, cfg.samples_per_unit)
        .inf;
    let cap_b = eq
        .b
        .ess_bounds(window.lo, window.hi, cfg.samples_per_unit)
        .sup
        .max(0.0);
    let mut witnesses = BTreeMap::new();
    witnesses.insert("alpha".into(), alpha);
    witnesses.insert("cap_b".into(), cap_b);
    let paper_ref = "positivity of the fundamental kernel from a finite time on: summable positive \
                     part of b under positive damping, a tail bound a(t)^2 >= 4 sup b+, or a tail \
                     auxiliary bound";
    let finish = |cond: u8, margin: f64, pass: bool, witnesses: BTreeMap<String, f64>| {
        Ok(Certificate {
            criterion: format!("C7_{cond}"),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            claim: Claim::NonoscillationPositivity,
            witnesses,
            margin,
            window,
            paper_ref,
        })
    };

    let bp = eq.b.positive_part();
    let quad_cfg = QuadConfig {
        tol: 1e-8,
        ..QuadConfig::default()
    };
    let bp_breaks = bp.breakpoints_in(t0, span_end);
    let mid = 0.5 * (t0 + span_end);
    let mut bp_f = |t: f64| bp.eval_side(t, Side::Right);
    let int_head = integrate_fn(&mut bp_f, t0, mid, &bp_breaks, &quad_cfg)?;
    let int_tail = integrate_fn(&mut bp_f, mid, span_end, &bp_breaks, &quad_cfg)?;
    witnesses.insert("int_bplus_tail".into(), int_tail);
    // The tail half contributing under one millionth of the whole stands in
    // for summability of the positive part of b.
    let summable = int_tail <= 1e-6 * (1.0 + int_head + int_tail);
    if summable && alpha >= cfg.strict_margin {
        witnesses.insert("t0".into(), window.lo);
        return finish(1, alpha, true, witnesses);
    }

    let four_b = 4.0 * cap_b;
    let full = Window {
        lo: t0,
        hi: span_end,
        periodic: false,
    };
    let samples = sample_coeffs(eq, &full, HORIZON_GRID_PER_UNIT);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| samples.ts[i].total_cmp(&samples.ts[j]));
    let ts_sorted: Vec<f64> = order.iter().map(|&i| samples.ts[i]).collect();
    let slack: Vec<f64> = order
        .iter()
        .map(|&i| samples.a[i].min(samples.a[i] * samples.a[i] - four_b))
        .collect();
    let mut suffix = vec![f64::INFINITY; slack.len() + 1];
    for i in (0..slack.len()).rev() {
        suffix[i] = slack[i].min(suffix[i + 1]);
    }
    // A shift time in the final half of the span would leave no data to
    // check the inequality on, so candidates stop at the midpoint.
    let mut margin_2 = f64::NEG_INFINITY;
    let mut t0_2 = t0;
    for i in 0..slack.len() {
        if ts_sorted[i] > mid {
            break;
        }
        if suffix[i] > margin_2 {
            margin_2 = suffix[i];
            t0_2 = ts_sorted[i];
        }
        if suffix[i] >= -NONSTRICT_SLACK {
            break;
        }
    }
    witnesses.insert("margin_2".into(), margin_2);
    if margin_2 >= -NONSTRICT_SLACK {
        witnesses.insert("t0".into(), t0_2);
        return finish(2, margin_2, true, witnesses);
    }

    let sup_from = match eq.period {
        Some(w) => span_end - w,
        None => window.lo,
    };
    let aux = AuxCondition {
        eq,
        source: &bp,
        t0,
        t_end: span_end,
        sup_from,
        tol: cfg.tol,
    };
    // The tail condition asks for sup m / lambda strictly below one.
    let ratio_excess = |l: f64| {
        let e = aux.excess(l);
        if e.is_finite() {
            e / l
        } else {
            f64::INFINITY
        }
    };
    let (l3, ratio_min) = positive_line_min(ratio_excess, -6.0, 3.0, 19, 60);
    let margin_3 = -ratio_min;
    witnesses.insert("lambda_3".into(), l3);
    witnesses.insert("margin_3".into(), margin_3);
    if margin_3 >= cfg.strict_margin {
        witnesses.insert("t0".into(), window.lo);
        return finish(3, margin_3, true, witnesses);
    }

    let (cond, best) = [(1u8, f64::NEG_INFINITY), (2, margin_2), (3, margin_3)]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    finish(cond, best, false, witnesses)
}

/// Verifies a user-supplied nonnegative witness u against the integral
/// inequality it must satisfy: u(t) stays above the solution of
/// m' = b - (a - u) m started from zero.
pub fn verify_witness_u(
    eq: &EquationSpec,
    u: &CoefficientExpr,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<bool, CertifyError> {
    let (inf_u, slack) = witness_slack(eq, u, horizon, cfg)?;
    Ok(inf_u >= -NONSTRICT_SLACK && slack >= -NONSTRICT_SLACK)
}

fn witness_slack(
    eq: &EquationSpec,
    u: &CoefficientExpr,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<(f64, f64), CertifyError> {
    let t0 = eq.t_start;
    let t_end = t0 + horizon;
    let inf_u = u.ess_bounds(t0, t_end, cfg.samples_per_unit).inf;
    let mut breaks = eq.breakpoints_in(t0, t_end);
    breaks.extend(u.breakpoints_in(t0, t_end));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let rhs = |t: f64, m: f64, side: Side| {
        eq.b.eval_side(t, side) - (eq.a.eval_side(t, side) - u.eval_side(t, side)) * m
    };
    let nodes = scalar_ode_nodes(&rhs, t0, 0.0, t_end, &breaks, cfg.tol)?;
    let mut slack = f64::INFINITY;
    for &(t, m) in &nodes {
        let side = if t >= t_end { Side::Left } else { Side::Right };
        slack = slack.min(u.eval_side(t, side) - m);
    }
    Ok((inf_u, slack))
}

/// Certificate wrapper around [`verify_witness_u`], carrying the measured
/// slack as the margin.
pub fn cert_witness_u(
    eq: &EquationSpec,
    u: &CoefficientExpr,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate, CertifyError> {
    let (inf_u, slack) = witness_slack(eq, u, horizon, cfg)?;
    let window = Window {
        lo: eq.t_start,
        hi: eq.t_start + horizon,
        periodic: false,
    };
    let mut witnesses = BTreeMap::new();
    witnesses.insert("inf_u".into(), inf_u);
    witnesses.insert("slack".into(), slack);
    let paper_ref = "positivity from an explicit nonnegative witness dominating its own integral \
                     transform";
    let verdict = if inf_u < -NONSTRICT_SLACK {
        Verdict::Inapplicable
    } else if slack >= -NONSTRICT_SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let margin = if verdict == Verdict::Inapplicable {
        0.0
    } else {
        slack
    };
    Ok(Certificate {
        criterion: "WITNESS_U".into(),
        verdict,
        claim: Claim::NonoscillationPositivity,
        witnesses,
        margin,
        window,
        paper_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::EquationSpec;
    use crate::expr::CoefficientExpr;
    use approx::assert_relative_eq;

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

    #[test]
    fn quadratic_shift_certifies_constant_stable_equation() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let cert = cert_quadratic_lambda(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert_relative_eq!(cert.margin, 0.25, max_relative = 1e-6);
        assert_relative_eq!(cert.witnesses["lambda"], -1.5, epsilon = 1e-6);
    }

    #[test]
    fn quadratic_shift_fails_for_the_oscillator() {
        let eq = EquationSpec::constant(0.0, 1.0);
        let cert = cert_quadratic_lambda(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_relative_eq!(cert.margin, -1.0, max_relative = 1e-9);
    }

    #[test]
    fn quadratic_shift_handles_oscillating_b() {
        let eq = EquationSpec::new(CoefficientExpr::constant(2.0), shifted_sin(0.75, 0.1))
            .with_period(std::f64::consts::TAU);
        let cert = cert_quadratic_lambda(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert_relative_eq!(cert.margin, 0.15, max_relative = 1e-5);
        assert_relative_eq!(cert.witnesses["lambda"], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn root_separation_passes_distinct_real_roots() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let cert = cert_levin(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        assert_relative_eq!(cert.margin, 1.0, max_relative = 1e-9);
        assert_relative_eq!(cert.witnesses["nu_1"], -1.5, max_relative = 1e-9);
        assert_relative_eq!(cert.witnesses["nu_2"], -1.0, max_relative = 1e-9);
    }

    #[test]
    fn root_separation_is_inapplicable_under_negative_discriminant() {
        let eq = EquationSpec::constant(1.0, 1.0);
        let cert = cert_levin(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inapplicable);
        assert_relative_eq!(
            cert.witnesses["min_discriminant"],
            -0.75,
            max_relative = 1e-9
        );
    }

    #[test]
    fn root_separation_tolerates_small_oscillation() {
        let eq = EquationSpec::new(CoefficientExpr::constant(3.0), shifted_sin(2.0, 0.05))
            .with_period(std::f64::consts::TAU);
        let cert = cert_levin(&eq, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.claim, Claim::ExpStable);
        // Roots are -1.5 -/+ sqrt(2.25 - b) with b in [1.95, 2.05], so the
        // ranges stay 2 sqrt(0.2) apart.
        assert_relative_eq!(cert.margin, 2.0 * 0.2_f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn pointwise_conditions_pick_the_shift_for_constant_coefficients() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let cert = cert_thm3(&eq, 0.0, 200.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "T3_2");
        assert_relative_eq!(cert.margin, 3.0 - 2.0 * 2.0_f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(
            cert.witnesses["lambda_2"],
            0.5_f64.sqrt(),
            max_relative = 1e-5
        );
    }

    #[test]
    fn pointwise_conditions_fail_for_weak_damping() {
        let eq = EquationSpec::constant(1.0, 1.0);
        let cert = cert_thm3(&eq, 0.0, 20.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.criterion.starts_with("T3"));
        assert!((cert.margin + 1.0).abs() < 1e-3, "margin {}", cert.margin);
    }

    #[test]
    fn growing_damping_dominates_cumulative_b() {
        let eq = EquationSpec::new(
            CoefficientExpr::Poly {
                coeffs: vec![0.0, 1.0],
            },
            CoefficientExpr::constant(0.5),
        );
        let cert = cert_thm3(&eq, 0.0, 10.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "T3_1");
        assert!(cert.margin.abs() <= 1e-9, "margin {}", cert.margin);
    }

    #[test]
    fn tail_bound_rejects_strong_periodic_forcing() {
        let eq = EquationSpec::new(CoefficientExpr::constant(2.0), shifted_sin(1.0, 0.99))
            .with_period(std::f64::consts::TAU);
        let cert = cert_cor7(&eq, 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.criterion.starts_with("C7"));
        assert_relative_eq!(
            cert.witnesses["margin_2"],
            4.0 - 4.0 * 1.99,
            max_relative = 1e-9
        );
        assert!(cert.margin < 0.0);
    }

    #[test]
    fn tail_bound_accepts_strong_damping() {
        let eq = EquationSpec::new(CoefficientExpr::constant(3.0), shifted_sin(2.0, 0.1))
            .with_period(std::f64::consts::TAU);
        let cert = cert_cor7(&eq, 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "C7_2");
        assert_relative_eq!(cert.margin, 9.0 - 4.0 * 2.1, max_relative = 1e-9);
    }

    #[test]
    fn summable_b_passes_the_tail_test() {
        let eq = EquationSpec::new(
            CoefficientExpr::constant(1.0),
            CoefficientExpr::PwConst {
                breaks: vec![1.0, 2.0, 3.0],
                values: vec![0.5, 0.2, 0.05, 0.0],
            },
        );
        let cert = cert_cor7(&eq, 500.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.criterion, "C7_1");
        assert_relative_eq!(cert.margin, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn witness_matching_the_damping_holds_only_briefly() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let u = CoefficientExpr::constant(3.0);
        assert!(verify_witness_u(&eq, &u, 1.0, &CertifyConfig::default()).unwrap());
        assert!(!verify_witness_u(&eq, &u, 10.0, &CertifyConfig::default()).unwrap());
    }

    #[test]
    fn witness_below_the_damping_holds_globally() {
        let eq = EquationSpec::constant(3.0, 2.0);
        let u = CoefficientExpr::constant(1.0);
        assert!(verify_witness_u(&eq, &u, 10.0, &CertifyConfig::default()).unwrap());
    }

    #[test]
    fn zero_witness_fails_for_the_oscillator() {
        let eq = EquationSpec::constant(0.0, 1.0);
        let u = CoefficientExpr::constant(0.0);
        assert!(!verify_witness_u(&eq, &u, 10.0, &CertifyConfig::default()).unwrap());
        let cert = cert_witness_u(&eq, &u, 10.0, &CertifyConfig::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.margin < -1.0);
    }
}
