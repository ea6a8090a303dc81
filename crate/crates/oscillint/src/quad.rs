//! Adaptive Gauss-Kronrod quadrature for coefficient integrals.
//!
//! Panels are split at step-function jumps before any refinement, so the
//! integrand is smooth (or at worst kinked) inside every panel and the
//! embedded error estimate stays trustworthy. Refinement bisects whichever
//! panel misses its share of the tolerance; the shares are proportional to
//! panel length, which keeps the procedure deterministic.

use crate::expr::{CoefficientExpr, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    /// The refinement budget ran out before the tolerance was met. The value
    /// computed so far and its error estimate ride along.
    #[error("quadrature budget exhausted: estimate {estimate}, error bound {error_bound}")]
    Budget { estimate: f64, error_bound: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Absolute tolerance for the whole integral.
    pub tol: f64,
    /// Cap on the number of panel evaluations.
    pub panel_budget: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: 1e-10,
            panel_budget: 1_000_000,
        }
    }
}

/// 15-point Kronrod abscissae on [0, 1] side of the origin.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Embedded 7-point Gauss weights; they pair with every other Kronrod node.
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod pass over `[lo, hi]`: returns the Kronrod value, the
/// magnitude of the Gauss-Kronrod difference as an error proxy, and the
/// Kronrod estimate of the integral of `|f|`.
fn gk15(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut resabs = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let v = f(center);
            kronrod += wk * v;
            gauss += WG[3] * v;
            resabs += wk * v.abs();
            continue;
        }
        let v1 = f(center - half * x);
        let v2 = f(center + half * x);
        kronrod += wk * (v1 + v2);
        resabs += wk * (v1.abs() + v2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (v1 + v2);
        }
    }
    (
        half * kronrod,
        (half * (kronrod - gauss)).abs(),
        half.abs() * resabs,
    )
}

/// Integrate an arbitrary function over `[lo, hi]`. `breaks` lists interior
/// points where the integrand may jump; panels never straddle them.
pub fn integrate_fn(
    f: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<f64, QuadError> {
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let total_len = b - a;

    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut left = a;
    for &br in breaks {
        if br > a && br < b {
            panels.push((left, br));
            left = br;
        }
    }
    panels.push((left, b));

    let mut value = 0.0;
    let mut error = 0.0;
    let mut used = 0usize;
    let mut stack: Vec<(f64, f64)> = panels.into_iter().rev().collect();
    while let Some((plo, phi)) = stack.pop() {
        used += 1;
        if used > cfg.panel_budget {
            // Close out the remaining panels unrefined so the caller gets an
            // honest estimate with a (likely too large) error bound.
            let (v, e, _) = gk15(f, plo, phi);
            value += v;
            error += e;
            for (qlo, qhi) in stack.into_iter().rev() {
                let (v, e, _) = gk15(f, qlo, qhi);
                value += v;
                error += e;
            }
            return Err(QuadError::Budget {
                estimate: sign * value,
                error_bound: error,
            });
        }
        let (v, e, resabs) = gk15(f, plo, phi);
        let share = cfg.tol * (phi - plo) / total_len;
        // Panels narrower than a few ulps cannot be split meaningfully, and
        // error estimates at the rounding floor of the function values cannot
        // shrink further no matter how the panel is split.
        let unsplittable = (phi - plo) <= 8.0 * f64::EPSILON * plo.abs().max(phi.abs()).max(1.0);
        let at_rounding_floor = e <= 50.0 * f64::EPSILON * resabs;
        if e <= share || at_rounding_floor || unsplittable {
            value += v;
            error += e;
        } else {
            let mid = 0.5 * (plo + phi);
            stack.push((mid, phi));
            stack.push((plo, mid));
        }
    }
    Ok(sign * value)
}

/// Integrate a coefficient expression over `[s, t]`, using the closed form
/// when the grammar admits one.
pub fn integrate_expr(
    expr: &CoefficientExpr,
    s: f64,
    t: f64,
    cfg: &QuadConfig,
) -> Result<f64, QuadError> {
    if let Some(v) = expr.closed_integral(s, t) {
        return Ok(v);
    }
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    let breaks = expr.breakpoints_in(lo, hi);
    integrate_fn(
        &mut |x| expr.eval_side(x, Side::Right),
        s,
        t,
        &breaks,
        cfg,
    )
}
