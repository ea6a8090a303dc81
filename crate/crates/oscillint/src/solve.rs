//! Explicit Runge-Kutta integration with dense output.
//!
//! The stepper is the Dormand-Prince 5(4) pair with the first-same-as-last
//! stage reuse and the standard quartic interpolant. Step acceptance controls
//! error per unit step, so halving the tolerance roughly halves the global
//! error. Steps never straddle declared breakpoints: integration restarts
//! with a fresh first stage on the far side of each jump, and the stages that
//! land exactly on a segment end evaluate the left-sided limit so the
//! interpolant of the closing step stays consistent with the segment it
//! covers.
//!
//! Everything here is deterministic: no randomness, no wall clock, and a
//! fixed refinement rule, so repeated runs produce identical trajectories.

use crate::expr::Side;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("tolerance {tol} outside supported range [1e-14, 1e-4]")]
    BadTol { tol: f64 },
    #[error("solution stopped being finite near t = {t}")]
    NonFinite { t: f64 },
    #[error("step size underflowed near t = {t}; the problem may be too stiff")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted near t = {t}")]
    Budget { t: f64 },
    #[error(
        "Wronskian mismatch at t = {t}: direct {direct}, expected {liouville}; \
         the integration cannot be trusted"
    )]
    WronskianMismatch { t: f64, direct: f64, liouville: f64 },
}

/// Right-hand side of a first-order system. The side flag matters only when
/// `t` is exactly a declared breakpoint of the coefficients.
pub trait Rhs<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N], side: Side) -> [f64; N];
}

impl<const N: usize, F> Rhs<N> for F
where
    F: Fn(f64, &[f64; N], Side) -> [f64; N],
{
    fn eval(&self, t: f64, y: &[f64; N], side: Side) -> [f64; N] {
        self(t, y, side)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    /// Local error per unit step, relative to `1 + |y|`.
    pub tol: f64,
    pub max_step: f64,
    /// Cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_step: 0.1,
            max_steps: 2_000_000,
        }
    }
}

impl SolveConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolveConfig {
            tol,
            ..SolveConfig::default()
        }
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if !(1e-14..=1e-4).contains(&self.tol) {
            return Err(SolveError::BadTol { tol: self.tol });
        }
        Ok(())
    }
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Weights behind the quartic interpolant's fifth coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step together with its interpolant coefficients.
#[derive(Debug, Clone)]
pub struct StepRecord<const N: usize> {
    pub t: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rc: [[f64; N]; 5],
}

impl<const N: usize> StepRecord<N> {
    /// Evaluate the interpolant at `t + theta * h`. Exact at both endpoints.
    pub fn eval_dense(&self, theta: f64) -> [f64; N] {
        let mut out = [0.0; N];
        let th1 = 1.0 - theta;
        for i in 0..N {
            out[i] = self.rc[0][i]
                + theta
                    * (self.rc[1][i]
                        + th1 * (self.rc[2][i] + theta * (self.rc[3][i] + th1 * self.rc[4][i])));
        }
        out
    }
}

/// Integrate from `t0` to `t_end` (forward only), reporting every accepted
/// step to `sink`. Returns the final state.
pub fn integrate<const N: usize>(
    rhs: &dyn Rhs<N>,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    breaks: &[f64],
    cfg: &SolveConfig,
    sink: &mut dyn FnMut(StepRecord<N>),
) -> Result<[f64; N], SolveError> {
    cfg.check()?;
    assert!(
        t_end >= t0 && t_end.is_finite() && t0.is_finite(),
        "integration runs forward over a finite span"
    );
    if t_end == t0 {
        return Ok(y0);
    }

    let mut segments: Vec<f64> = Vec::with_capacity(breaks.len() + 1);
    for &b in breaks {
        if b > t0 && b < t_end {
            segments.push(b);
        }
    }
    segments.push(t_end);

    let mut t = t0;
    let mut y = y0;
    let mut h = cfg.max_step.min(t_end - t0);
    let mut steps_used = 0usize;

    for &seg_end in &segments {
        let mut k1 = rhs.eval(t, &y, Side::Right);
        loop {
            if t >= seg_end {
                break;
            }
            steps_used += 1;
            if steps_used > cfg.max_steps {
                return Err(SolveError::Budget { t });
            }
            let mut h_try = h.min(cfg.max_step).min(seg_end - t);
            let hitting_end = h_try >= seg_end - t;
            if hitting_end {
                h_try = seg_end - t;
            }

            let stage =
                |c: f64, acc: &[f64; N], side: Side, rhs: &dyn Rhs<N>| -> [f64; N] {
                    let tc = if c == 1.0 && hitting_end {
                        seg_end
                    } else {
                        t + c * h_try
                    };
                    rhs.eval(tc, acc, side)
                };
            let end_side = if hitting_end { Side::Left } else { Side::Right };

            let combine = |y: &[f64; N], h: f64, ks: &[&[f64; N]], ws: &[f64]| {
                let mut out = *y;
                for i in 0..N {
                    let mut s = 0.0;
                    for (k, w) in ks.iter().zip(ws) {
                        s += w * k[i];
                    }
                    out[i] += h * s;
                }
                out
            };

            let acc = combine(&y, h_try, &[&k1], &A2);
            let k2 = stage(C[1], &acc, Side::Right, rhs);
            let acc = combine(&y, h_try, &[&k1, &k2], &A3);
            let k3 = stage(C[2], &acc, Side::Right, rhs);
            let acc = combine(&y, h_try, &[&k1, &k2, &k3], &A4);
            let k4 = stage(C[3], &acc, Side::Right, rhs);
            let acc = combine(&y, h_try, &[&k1, &k2, &k3, &k4], &A5);
            let k5 = stage(C[4], &acc, Side::Right, rhs);
            let acc = combine(&y, h_try, &[&k1, &k2, &k3, &k4, &k5], &A6);
            let k6 = stage(C[5], &acc, end_side, rhs);
            let y1 = combine(&y, h_try, &[&k1, &k2, &k3, &k4, &k5, &k6], &B[..6]);
            let k7 = stage(C[6], &y1, end_side, rhs);

            let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
            let mut err_sq = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (k, w) in ks.iter().zip(&E) {
                    e += w * k[i];
                }
                e *= h_try;
                let scale = 1.0 + y[i].abs().max(y1[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / N as f64).sqrt();
            if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::NonFinite { t });
            }

            let target = cfg.tol * h_try;
            // Slivers created by breakpoint clamping are accepted as-is;
            // their truncation error is far below anything measurable.
            let sliver = h_try <= 1e-12 * t.abs().max(1.0);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (target / err).powf(0.25)).clamp(0.2, 5.0)
            };
            if err <= target || sliver {
                let t_new = if hitting_end { seg_end } else { t + h_try };
                let mut rc = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y1[i] - y[i];
                    rc[0][i] = y[i];
                    rc[1][i] = dy;
                    rc[2][i] = h_try * k1[i] - dy;
                    rc[3][i] = dy - h_try * k7[i] - rc[2][i];
                    let mut s = 0.0;
                    for (k, w) in ks.iter().zip(&D) {
                        s += w * k[i];
                    }
                    rc[4][i] = h_try * s;
                }
                sink(StepRecord {
                    t,
                    h: h_try,
                    y0: y,
                    y1,
                    rc,
                });
                t = t_new;
                y = y1;
                k1 = k7;
                h = h_try * factor;
            } else {
                if h_try <= 1e-13 * t.abs().max(1.0) {
                    return Err(SolveError::StepUnderflow { t });
                }
                h = h_try * factor.min(0.9);
            }
        }
        // Crossing into the next segment invalidates the last stage, so the
        // loop re-evaluates it on the far side of the jump.
    }
    Ok(y)
}

/// Zeros of a scalar trajectory component, plus places where it grazed zero
/// without a detected sign change.
#[derive(Debug, Clone, Default)]
pub struct ZeroScan {
    pub zeros: Vec<f64>,
    pub tangential: Vec<f64>,
}

/// A planar trajectory with dense output, as produced by the second-order
/// equation solvers. Component 0 is the position, component 1 the velocity.
#[derive(Debug)]
pub struct Trajectory {
    t0: f64,
    t_end: f64,
    y0: [f64; 2],
    steps: Vec<StepRecord<2>>,
    zeros: OnceLock<ZeroScan>,
}

impl Trajectory {
    /// `y0` is the state at `t0`; it carries the trajectory's value when
    /// the integration span is empty and no steps exist.
    pub fn new(t0: f64, t_end: f64, y0: [f64; 2], steps: Vec<StepRecord<2>>) -> Self {
        Trajectory {
            t0,
            t_end,
            y0,
            steps,
            zeros: OnceLock::new(),
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> &[StepRecord<2>] {
        &self.steps
    }

    /// State at `t`, which must lie within the integrated span (a hair of
    /// roundoff slack is tolerated at both ends).
    pub fn state(&self, t: f64) -> [f64; 2] {
        assert!(
            t >= self.t0 - 1e-9 && t <= self.t_end + 1e-9,
            "dense evaluation outside the integrated span"
        );
        if self.steps.is_empty() {
            return self.y0;
        }
        let idx = self
            .steps
            .partition_point(|s| s.t + s.h <= t)
            .min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        s.eval_dense(theta)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.state(t)[0]
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.state(t)[1]
    }

    /// Position, treating times before the start as zero. This is the
    /// convention for one-sided kernels, which vanish ahead of their source.
    pub fn value_or_zero(&self, t: f64) -> f64 {
        if t < self.t0 {
            0.0
        } else {
            self.value(t)
        }
    }

    /// Largest `|x|` over the accepted nodes.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = self.y0[0].abs();
        for s in &self.steps {
            m = m.max(s.y0[0].abs());
        }
        m.max(self.steps.last().map_or(0.0, |s| s.y1[0].abs()))
    }

    /// Zeros of the position component, excluding the initial time. Computed
    /// once and cached.
    pub fn zeros(&self) -> &ZeroScan {
        self.zeros.get_or_init(|| scan_zeros(self))
    }
}

/// Subdivisions per step when hunting for sign changes.
const ZERO_SCAN_SUBDIV: usize = 8;
const ZERO_BISECTIONS: usize = 48;

/// Bisect a sign change of `f` on `[lo, hi]` given `f(lo) = flo != 0`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..ZERO_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

fn scan_zeros(traj: &Trajectory) -> ZeroScan {
    let global_scale = traj.max_abs().max(1.0);
    let mut zeros = Vec::new();
    let mut tangential = Vec::new();
    const M: usize = ZERO_SCAN_SUBDIV;
    for s in traj.steps() {
        let mut xs = [0.0; M + 1];
        let mut vs = [0.0; M + 1];
        let mut step_max = 0.0_f64;
        for j in 0..=M {
            let st = s.eval_dense(j as f64 / M as f64);
            xs[j] = st[0];
            vs[j] = st[1];
            step_max = step_max.max(st[0].abs());
        }
        if step_max == 0.0 {
            // The solution has underflowed to exact zero here; there is
            // nothing meaningful to locate.
            continue;
        }
        let mut zero_in_step = false;
        for j in 0..=M {
            let theta = j as f64 / M as f64;
            if xs[j] == 0.0 {
                zeros.push(s.t + theta * s.h);
                zero_in_step = true;
            } else if j < M && xs[j] * xs[j + 1] < 0.0 {
                let theta_hi = (j + 1) as f64 / M as f64;
                let root = bisect(|th| s.eval_dense(th)[0], theta, theta_hi, xs[j]);
                zeros.push(s.t + root * s.h);
                zero_in_step = true;
            }
        }
        if zero_in_step {
            continue;
        }
        // No sign change: look for a tangential approach at an extremum. The
        // position there must be tiny both globally and relative to this
        // step, which keeps deeply decayed oscillations from being flagged
        // at every turning point.
        for j in 0..M {
            if vs[j] * vs[j + 1] < 0.0 {
                let theta = j as f64 / M as f64;
                let theta_hi = (j + 1) as f64 / M as f64;
                let ext = bisect(|th| s.eval_dense(th)[1], theta, theta_hi, vs[j]);
                let x_ext = s.eval_dense(ext)[0].abs();
                if x_ext <= 1e-8 * global_scale && x_ext <= 1e-3 * step_max {
                    tangential.push(s.t + ext * s.h);
                }
            }
        }
    }
    let start = traj.t_start();
    let tolerance = |z: f64| 1e-9 * z.abs().max(1.0);
    zeros.retain(|&z| z > start + tolerance(z));
    zeros.dedup_by(|b, a| (*b - *a).abs() <= tolerance(*a));
    tangential.retain(|&z| z > start + tolerance(z));
    tangential.dedup_by(|b, a| (*b - *a).abs() <= tolerance(*a));
    ZeroScan { zeros, tangential }
}

/// Dense-sample a recorded solution at sorted `times`. Times outside the
/// records clamp to the nearest endpoint.
pub fn sample_steps<const N: usize>(steps: &[StepRecord<N>], times: &[f64]) -> Vec<[f64; N]> {
    debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0usize;
    for &t in times {
        while idx + 1 < steps.len() && steps[idx].t + steps[idx].h < t {
            idx += 1;
        }
        let s = &steps[idx];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        out.push(s.eval_dense(theta));
    }
    out
}
