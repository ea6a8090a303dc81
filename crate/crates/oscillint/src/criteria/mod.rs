//! Certificates: sufficient conditions for nonoscillation-type positivity
//! and exponential stability, each checked numerically with explicit
//! witnesses and margins.
//!
//! A certificate never asserts instability. PASS means every inequality of
//! the criterion was verified at the recorded sampling resolution, FAIL means
//! the search over free parameters ended without a witness, and INAPPLICABLE
//! means a hypothesis of the criterion (periodicity, sign conditions) is not
//! met. Essential infima and suprema over infinite tails are approximated on
//! a finite window: exactly one period when the equation declares one, the
//! second half of the search span otherwise. The window rides along in the
//! certificate so a reader can judge what was actually checked.

pub mod periodic;
pub mod positivity;
pub mod stability;

use crate::equation::EquationSpec;
use crate::expr::Side;
use crate::fundamental::KernelError;
use crate::quad::QuadError;
use crate::solve::{integrate, SolveConfig, SolveError};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

pub use periodic::cert_thm10;
pub use positivity::{
    cert_cor7, cert_levin, cert_quadratic_lambda, cert_thm3, cert_witness_u, verify_witness_u,
};
pub use stability::{
    cert_thm6, cert_thm7, cert_thm8, cert_thm9, thm8_margin_at, thm9_margin_at, Thm8Margin,
    Thm9Margin,
};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("constant-coefficient bounds need a > 0 and b > 0, got a = {a}, b = {b}")]
    NonpositiveConstants { a: f64, b: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inapplicable => "INAPPLICABLE",
        }
    }
}

/// What a passing certificate asserts about the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    NonoscillationPositivity,
    ExpStable,
    Bounded,
    TendsToZero,
}

impl Claim {
    pub fn as_str(self) -> &'static str {
        match self {
            Claim::NonoscillationPositivity => "NONOSCILLATION_POSITIVITY",
            Claim::ExpStable => "EXP_STABLE",
            Claim::Bounded => "BOUNDED",
            Claim::TendsToZero => "TENDS_TO_ZERO",
        }
    }

    /// Strength order used when summarizing: exponential stability beats
    /// decay-to-zero beats boundedness beats bare positivity.
    fn rank(self) -> u8 {
        match self {
            Claim::ExpStable => 3,
            Claim::TendsToZero => 2,
            Claim::Bounded => 1,
            Claim::NonoscillationPositivity => 0,
        }
    }
}

/// The time interval on which suprema and infima were measured. `periodic`
/// marks that the interval is one full period, in which case the bounds are
/// exact for the whole half-line rather than a finite approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

/// Outcome of one criterion: the verdict, the claim it certifies when it
/// passes, the named witness values the check was built on, and the margin
/// by which the decisive inequality cleared (negative when it did not).
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub criterion: String,
    pub verdict: Verdict,
    pub claim: Claim,
    pub witnesses: BTreeMap<String, f64>,
    pub margin: f64,
    pub window: Window,
    pub paper_ref: &'static str,
}

/// Tunables shared by every certifier.
#[derive(Debug, Clone, Copy)]
pub struct CertifyConfig {
    /// Integration and quadrature tolerance.
    pub tol: f64,
    /// End of the range on which pointwise conditions are verified.
    pub horizon: f64,
    /// End of the span used to approximate tail behavior (limsup, liminf)
    /// for equations without a declared period.
    pub search_t: f64,
    /// Strict inequalities must clear by at least this much.
    pub strict_margin: f64,
    /// Sampling density for essential bounds.
    pub samples_per_unit: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            tol: 1e-10,
            horizon: 200.0,
            search_t: 500.0,
            strict_margin: 1e-9,
            samples_per_unit: 1e4,
        }
    }
}

/// Slack granted to non-strict inequalities, absorbing roundoff.
pub(crate) const NONSTRICT_SLACK: f64 = 1e-12;

/// Sampling density for grids that span the whole horizon rather than one
/// window.
pub(crate) const HORIZON_GRID_PER_UNIT: f64 = 100.0;

/// Bounds on the kernel of a constant-coefficient equation and on its time
/// derivative, split by the sign of the discriminant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Bounds {
    /// Bound on the integral of |kernel|.
    pub k0: f64,
    /// Bound on the integral of |d kernel / dt|.
    pub k1: f64,
    /// 1 for two real roots, 2 for a complex pair, 3 for a double root.
    pub case: u8,
}

/// Kernel integral bounds for x'' + a x' + b x = 0 with positive constants.
pub fn lemma2_bounds(a: f64, b: f64) -> Result<Lemma2Bounds, CertifyError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(CertifyError::NonpositiveConstants { a, b });
    }
    let disc = a * a - 4.0 * b;
    // Exact ties land in the double-root branch; near-ties stay in their
    // open case, whose formulas remain finite and correct.
    let bounds = if disc > 0.0 {
        let s = disc.sqrt();
        Lemma2Bounds {
            k0: 1.0 / b,
            k1: 2.0 * a / (s * (a - s)),
            case: 1,
        }
    } else if disc < 0.0 {
        let s = (-disc).sqrt();
        Lemma2Bounds {
            k0: 4.0 / (a * s),
            k1: 2.0 * (a + s) / (a * s),
            case: 2,
        }
    } else {
        Lemma2Bounds {
            k0: 1.0 / b,
            k1: 2.0 / b.sqrt(),
            case: 3,
        }
    };
    Ok(bounds)
}

/// Correlated samples of both coefficients over a window, including the
/// one-sided values at every jump.
pub(crate) struct CoeffSamples {
    pub ts: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CoeffSamples {
    pub fn len(&self) -> usize {
        self.ts.len()
    }
}

/// Density for stored sample arrays. Periodic windows are short and afford
/// the full configured density; long tails are capped to keep memory flat.
pub(crate) fn array_density(w: &Window, cfg: &CertifyConfig) -> f64 {
    if w.periodic {
        cfg.samples_per_unit
    } else {
        cfg.samples_per_unit.min(2000.0)
    }
}

pub(crate) fn sample_coeffs(eq: &EquationSpec, w: &Window, per_unit: f64) -> CoeffSamples {
    let n = (((w.hi - w.lo) * per_unit).ceil() as usize).clamp(1000, 3_000_000);
    let mut ts = Vec::with_capacity(n + 1);
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = if i == n {
            w.hi
        } else {
            w.lo + (w.hi - w.lo) * i as f64 / n as f64
        };
        let side = if i == n { Side::Left } else { Side::Right };
        ts.push(t);
        a.push(eq.a.eval_side(t, side));
        b.push(eq.b.eval_side(t, side));
    }
    for br in eq.breakpoints_in(w.lo, w.hi) {
        for side in [Side::Left, Side::Right] {
            ts.push(br);
            a.push(eq.a.eval_side(br, side));
            b.push(eq.b.eval_side(br, side));
        }
    }
    CoeffSamples { ts, a, b }
}

pub(crate) fn max_of(xs: &[f64]) -> f64 {
    xs.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
}

pub(crate) fn min_of(xs: &[f64]) -> f64 {
    xs.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Nodes of a scalar auxiliary ODE m' = rhs(t, m), recorded densely: every
/// accepted step contributes four interior interpolant samples plus its
/// endpoints.
pub(crate) fn scalar_ode_nodes(
    rhs: &dyn Fn(f64, f64, Side) -> f64,
    t0: f64,
    m0: f64,
    t_end: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64)>, SolveError> {
    let f = |t: f64, y: &[f64; 1], side: Side| [rhs(t, y[0], side)];
    let cfg = SolveConfig::with_tol(tol);
    let mut nodes = Vec::new();
    let end = integrate(&f, t0, [m0], t_end, breaks, &cfg, &mut |s| {
        for k in 0..4 {
            let theta = k as f64 / 4.0;
            nodes.push((s.t + theta * s.h, s.eval_dense(theta)[0]));
        }
    })?;
    nodes.push((t_end, end[0]));
    Ok(nodes)
}

/// Run every certifier in the canonical order. The certifiers are
/// independent and execute in parallel; the output order is fixed.
pub fn certify_all(
    eq: &EquationSpec,
    cfg: &CertifyConfig,
) -> Result<Vec<Certificate>, CertifyError> {
    type Job<'e> = Box<dyn Fn() -> Result<Certificate, CertifyError> + Send + Sync + 'e>;
    let t0 = eq.t_start;
    let jobs: Vec<Job> = vec![
        Box::new(|| cert_quadratic_lambda(eq, cfg.horizon, cfg)),
        Box::new(|| cert_levin(eq, cfg.horizon, cfg)),
        Box::new(|| cert_thm3(eq, t0, cfg.horizon, cfg)),
        Box::new(|| cert_cor7(eq, cfg.search_t, cfg)),
        Box::new(|| cert_thm6(eq, cfg)),
        Box::new(|| cert_thm7(eq, cfg.search_t, cfg)),
        Box::new(|| cert_thm8(eq, t0, cfg)),
        Box::new(|| cert_thm9(eq, t0, cfg)),
        Box::new(|| cert_thm10(eq, cfg)),
    ];
    let results: Vec<Result<Certificate, CertifyError>> =
        jobs.par_iter().map(|job| job()).collect();
    results.into_iter().collect()
}

/// The strongest claim among passing certificates, or "UNDECIDED".
pub fn summarize(certs: &[Certificate]) -> &'static str {
    certs
        .iter()
        .filter(|c| c.verdict == Verdict::Pass)
        .map(|c| c.claim)
        .max_by_key(|c| c.rank())
        .map_or("UNDECIDED", Claim::as_str)
}
