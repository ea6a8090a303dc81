//! Certifier for periodic equations built on the mean of
//! p = b - a^2/4 - a'/2 over one period.

use super::positivity::{condition1_margin, AuxCondition};
use super::{
    Certificate, CertifyConfig, CertifyError, Claim, Verdict, Window, NONSTRICT_SLACK,
};
use crate::equation::EquationSpec;
use crate::expr::Side;
use crate::quad::{integrate_expr, integrate_fn, QuadConfig};
use crate::search::positive_line_min;
use std::collections::BTreeMap;

/// For an equation with declared period and differentiable damping,
/// verifies that p = b - a^2/4 - a'/2 has positive mean over one period and
/// that one of three conditions holds there: the cumulative bound on b+,
/// an auxiliary-solution bound searched over lambda, or mean p+ at most
/// 4 / omega. Passing certifies bounded solutions, upgraded to decay to
/// zero when the damping has positive mean; negative mean damping is out
/// of scope.
pub fn cert_thm10(eq: &EquationSpec, cfg: &CertifyConfig) -> Result<Certificate, CertifyError> {
    let paper_ref = "for a periodic equation with positive mean of p = b - a^2/4 - a'/2, one of \
                     three one-period conditions bounds every solution; positive mean damping \
                     then forces decay to zero";
    let t0 = eq.t_start;
    let inapplicable = |window: Window, witnesses: BTreeMap<String, f64>, claim: Claim| {
        Ok(Certificate {
            criterion: "T10".into(),
            verdict: Verdict::Inapplicable,
            claim,
            witnesses,
            margin: 0.0,
            window,
            paper_ref,
        })
    };

    let Some(omega) = eq.period else {
        let window = Window {
            lo: t0,
            hi: t0 + cfg.horizon,
            periodic: false,
        };
        return inapplicable(window, BTreeMap::new(), Claim::TendsToZero);
    };
    let t_end = t0 + omega;
    let window = Window {
        lo: t0,
        hi: t_end,
        periodic: true,
    };
    let mut witnesses = BTreeMap::new();
    witnesses.insert("omega".into(), omega);
    if !eq.a.breakpoints_in(t0, t_end).is_empty() {
        witnesses.insert("a_has_jumps".into(), 1.0);
        return inapplicable(window, witnesses, Claim::TendsToZero);
    }

    let quad_cfg = QuadConfig {
        tol: cfg.tol,
        ..QuadConfig::default()
    };
    let p = eq.reduced_potential();
    let int_p = integrate_expr(&p, t0, t_end, &quad_cfg)?;
    let int_a = integrate_expr(&eq.a, t0, t_end, &quad_cfg)?;
    let ra = eq.a.ess_bounds(t0, t_end, cfg.samples_per_unit);
    let sup_abs_a = ra.inf.abs().max(ra.sup.abs());
    let mean_tol = (cfg.tol * omega * (1.0 + sup_abs_a)).max(1e-9);
    witnesses.insert("int_p".into(), int_p);
    witnesses.insert("int_a".into(), int_a);
    if int_a < -mean_tol {
        return inapplicable(window, witnesses, Claim::TendsToZero);
    }
    let claim = if int_a > mean_tol {
        Claim::TendsToZero
    } else {
        Claim::Bounded
    };
    let finish = |cond: u8, margin: f64, pass: bool, witnesses: BTreeMap<String, f64>| {
        Ok(Certificate {
            criterion: format!("T10_{cond}"),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            claim,
            witnesses,
            margin,
            window,
            paper_ref,
        })
    };

    if int_p < cfg.strict_margin {
        witnesses.insert("margin_p".into(), int_p);
        return Ok(Certificate {
            criterion: "T10".into(),
            verdict: Verdict::Fail,
            claim,
            witnesses,
            margin: int_p,
            window,
            paper_ref,
        });
    }

    let margin_1 = condition1_margin(eq, t0, t_end, cfg.tol)?;
    witnesses.insert("margin_1".into(), margin_1);
    if margin_1 >= -NONSTRICT_SLACK {
        return finish(1, int_p.min(margin_1), true, witnesses);
    }

    let bp = eq.b.positive_part();
    let aux = AuxCondition {
        eq,
        source: &bp,
        t0,
        t_end,
        sup_from: t0,
        tol: cfg.tol,
    };
    let (l2, excess_min) = positive_line_min(|l| aux.excess(l), -6.0, 3.0, 19, 60);
    let margin_2 = -excess_min;
    witnesses.insert("lambda_2".into(), l2);
    witnesses.insert("margin_2".into(), margin_2);
    if margin_2 >= -NONSTRICT_SLACK {
        return finish(2, int_p.min(margin_2), true, witnesses);
    }

    let pp = p.positive_part();
    let pp_breaks = pp.breakpoints_in(t0, t_end);
    let mut pp_f = |t: f64| pp.eval_side(t, Side::Right);
    let int_p_plus = integrate_fn(&mut pp_f, t0, t_end, &pp_breaks, &quad_cfg)?;
    let margin_3 = 4.0 / omega - int_p_plus;
    witnesses.insert("int_p_plus".into(), int_p_plus);
    witnesses.insert("margin_3".into(), margin_3);
    if margin_3 >= -NONSTRICT_SLACK {
        return finish(3, int_p.min(margin_3), true, witnesses);
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
