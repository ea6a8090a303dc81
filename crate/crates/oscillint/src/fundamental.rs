//! Fundamental solutions, the one-sided kernel, and the boundary kernel.
//!
//! All of these are trajectories of the homogeneous equation with specific
//! initial data: `x1` starts at (1, 0), `x2` at (0, 1), the one-sided kernel
//! `X(., s)` starts at (0, 1) at time `s`, and the companion kernel `Y(., s)`
//! starts at (1, 0) at time `s`. Every solve cross-checks nothing by itself;
//! [`fundamental_system`] additionally reconciles the directly computed
//! Wronskian with the damping-integral route and refuses to return if they
//! disagree.

use crate::equation::EquationSpec;
use crate::expr::Side;
use crate::quad::{QuadConfig, QuadError};
use crate::solve::{integrate, Rhs, SolveConfig, SolveError, StepRecord, Trajectory};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("coefficient integral failed: {0}")]
    Quad(#[from] QuadError),
    #[error(
        "boundary solution vanishes at omega = {omega} (|x2| = {x2_omega} against scale \
         {scale}); the boundary value problem is not solvable"
    )]
    SingularBoundary {
        omega: f64,
        x2_omega: f64,
        scale: f64,
    },
}

/// Right-hand side of the first-order reduction of the homogeneous equation.
struct HomRhs<'e> {
    eq: &'e EquationSpec,
}

impl Rhs<2> for HomRhs<'_> {
    fn eval(&self, t: f64, y: &[f64; 2], side: Side) -> [f64; 2] {
        let a = self.eq.a.eval_side(t, side);
        let b = self.eq.b.eval_side(t, side);
        [y[1], -a * y[1] - b * y[0]]
    }
}

/// Same with the forcing term added.
struct ForcedRhs<'e> {
    eq: &'e EquationSpec,
}

impl Rhs<2> for ForcedRhs<'_> {
    fn eval(&self, t: f64, y: &[f64; 2], side: Side) -> [f64; 2] {
        let a = self.eq.a.eval_side(t, side);
        let b = self.eq.b.eval_side(t, side);
        let f = self
            .eq
            .f
            .as_ref()
            .map_or(0.0, |f| f.eval_side(t, side));
        [y[1], f - a * y[1] - b * y[0]]
    }
}

fn run_to_trajectory<const N: usize>(
    rhs: &dyn Rhs<N>,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    breaks: &[f64],
    cfg: &SolveConfig,
) -> Result<(Vec<StepRecord<N>>, [f64; N]), SolveError> {
    let mut steps = Vec::new();
    let end = integrate(rhs, t0, y0, t_end, breaks, cfg, &mut |s| steps.push(s))?;
    Ok((steps, end))
}

/// Solve the (possibly forced) equation from arbitrary initial data.
pub fn solve_ivp(
    eq: &EquationSpec,
    t0: f64,
    x0: f64,
    v0: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, KernelError> {
    let cfg = SolveConfig::with_tol(tol);
    let breaks = eq.breakpoints_in(t0, t_end);
    let steps = if eq.f.is_some() {
        run_to_trajectory(&ForcedRhs { eq }, t0, [x0, v0], t_end, &breaks, &cfg)?.0
    } else {
        run_to_trajectory(&HomRhs { eq }, t0, [x0, v0], t_end, &breaks, &cfg)?.0
    };
    Ok(Trajectory::new(t0, t_end, [x0, v0], steps))
}

/// Solve the homogeneous equation regardless of any forcing term.
pub fn solve_homogeneous(
    eq: &EquationSpec,
    t0: f64,
    x0: f64,
    v0: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, KernelError> {
    let cfg = SolveConfig::with_tol(tol);
    let breaks = eq.breakpoints_in(t0, t_end);
    let steps = run_to_trajectory(&HomRhs { eq }, t0, [x0, v0], t_end, &breaks, &cfg)?.0;
    Ok(Trajectory::new(t0, t_end, [x0, v0], steps))
}

/// The pair of solutions with unit initial data: `x1(t0) = 1, x1'(t0) = 0`
/// and `x2(t0) = 0, x2'(t0) = 1`.
#[derive(Debug)]
pub struct FundamentalPair {
    pub x1: Trajectory,
    pub x2: Trajectory,
}

impl FundamentalPair {
    pub fn wronskian_at(&self, t: f64) -> f64 {
        self.x1.value(t) * self.x2.deriv(t) - self.x2.value(t) * self.x1.deriv(t)
    }
}

/// Solve for both fundamental solutions and verify the Wronskian against
/// `exp(-int a)` at eight interior checkpoints.
///
/// The comparison is relative for Wronskians of order one and absolute below
/// that: once the true Wronskian decays far under the integration tolerance,
/// its directly computed value carries only absolute accuracy, and a relative
/// test would reject perfectly healthy solves.
pub fn fundamental_system(
    eq: &EquationSpec,
    t0: f64,
    t_end: f64,
    tol: f64,
) -> Result<FundamentalPair, KernelError> {
    let x1 = solve_homogeneous(eq, t0, 1.0, 0.0, t_end, tol)?;
    let x2 = solve_homogeneous(eq, t0, 0.0, 1.0, t_end, tol)?;
    let pair = FundamentalPair { x1, x2 };
    let qcfg = QuadConfig {
        tol: (tol * 1e-2).max(1e-14),
        ..QuadConfig::default()
    };
    for k in 1..=8 {
        let t = t0 + (t_end - t0) * k as f64 / 8.0;
        let direct = pair.wronskian_at(t);
        let liouville = (-eq.damping_integral(t0, t, &qcfg)?).exp();
        let allowed = 10.0 * tol * liouville.abs().max(1.0);
        if !direct.is_finite() || (direct - liouville).abs() > allowed {
            return Err(KernelError::Solve(SolveError::WronskianMismatch {
                t,
                direct,
                liouville,
            }));
        }
    }
    Ok(pair)
}

/// The one-sided kernel `X(., s)`: zero with unit slope at `s`, integrated
/// out to `t_end`. Values before `s` are zero by convention, which
/// `Trajectory::value_or_zero` encodes.
pub fn fundamental_function(
    eq: &EquationSpec,
    s: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, KernelError> {
    solve_homogeneous(eq, s, 0.0, 1.0, t_end, tol)
}

/// The companion kernel `Y(., s)`: one with zero slope at `s`. This is the
/// first-order reduction of the auxiliary system y' = -z, z' = b y - a z
/// with y(s) = 1, z(s) = 0; the stored second component is y' = -z.
pub fn integro_fundamental(
    eq: &EquationSpec,
    s: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, KernelError> {
    solve_homogeneous(eq, s, 1.0, 0.0, t_end, tol)
}

/// Boundary kernel for the two-point problem x(t0) = x(t0 + omega) = 0.
#[derive(Debug)]
pub struct GreenKernel {
    eq: EquationSpec,
    t0: f64,
    omega: f64,
    tol: f64,
    x2: Trajectory,
    x2_at_end: f64,
}

/// One source column of the boundary kernel.
#[derive(Debug)]
pub struct GreenSlice {
    x: Trajectory,
    x_at_end: f64,
}

impl GreenKernel {
    /// Fails when the boundary solution `x2` vanishes at `t0 + omega`, in
    /// which case the two-point problem has no kernel.
    pub fn new(eq: &EquationSpec, omega: f64, tol: f64) -> Result<Self, KernelError> {
        let t0 = eq.t_start;
        let x2 = solve_homogeneous(eq, t0, 0.0, 1.0, t0 + omega, tol)?;
        let x2_at_end = x2.value(t0 + omega);
        let scale = x2.max_abs();
        if x2_at_end.abs() < 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(KernelError::SingularBoundary {
                omega,
                x2_omega: x2_at_end,
                scale,
            });
        }
        Ok(GreenKernel {
            eq: eq.clone(),
            t0,
            omega,
            tol,
            x2,
            x2_at_end,
        })
    }

    /// The kernel column for source time `s`.
    pub fn slice(&self, s: f64) -> Result<GreenSlice, KernelError> {
        assert!(s > self.t0 - 1e-12 && s < self.t0 + self.omega);
        let x = fundamental_function(&self.eq, s, self.t0 + self.omega, self.tol)?;
        let x_at_end = x.value(self.t0 + self.omega);
        Ok(GreenSlice { x, x_at_end })
    }

    /// `G(t, s)` evaluated from a prepared slice.
    pub fn value(&self, slice: &GreenSlice, t: f64) -> f64 {
        slice.x.value_or_zero(t) - self.x2.value(t) * slice.x_at_end / self.x2_at_end
    }

    /// The kernel on an `n` by `n` grid of interior points, indexed
    /// `[t_i][s_j]` with both axes uniform over the open interval.
    pub fn interior_grid(&self, n: usize) -> Result<Vec<Vec<f64>>, KernelError> {
        let h = self.omega / (n + 1) as f64;
        let mut out = vec![vec![0.0; n]; n];
        for j in 0..n {
            let s = self.t0 + h * (j + 1) as f64;
            let slice = self.slice(s)?;
            for (i, row) in out.iter_mut().enumerate() {
                let t = self.t0 + h * (i + 1) as f64;
                row[j] = self.value(&slice, t);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn damped_32() -> EquationSpec {
        EquationSpec::constant(3.0, 2.0)
    }

    /// Closed forms for x'' + 3x' + 2x = 0 (roots -1 and -2).
    fn x1_closed(t: f64) -> f64 {
        2.0 * (-t).exp() - (-2.0 * t).exp()
    }
    fn x2_closed(t: f64) -> f64 {
        (-t).exp() - (-2.0 * t).exp()
    }

    #[test]
    fn fundamental_pair_matches_closed_form() {
        let eq = damped_32();
        let pair = fundamental_system(&eq, 0.0, 5.0, 1e-10).unwrap();
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            assert_relative_eq!(pair.x1.value(t), x1_closed(t), max_relative = 1e-8);
            assert_relative_eq!(pair.x2.value(t), x2_closed(t), max_relative = 1e-8);
        }
    }

    #[test]
    fn kernel_is_shift_invariant_for_constant_coefficients() {
        let eq = damped_32();
        let x = fundamental_function(&eq, 1.5, 6.0, 1e-10).unwrap();
        for &t in &[2.0, 3.0, 4.5] {
            assert_relative_eq!(x.value(t), x2_closed(t - 1.5), max_relative = 1e-8);
        }
        assert_eq!(x.value_or_zero(1.0), 0.0);
    }

    #[test]
    fn companion_kernel_starts_flat() {
        let eq = damped_32();
        let y = integro_fundamental(&eq, 2.0, 7.0, 1e-10).unwrap();
        assert_relative_eq!(y.value(2.0), 1.0, epsilon = 1e-12);
        assert!(y.deriv(2.0).abs() < 1e-12);
        for &t in &[3.0, 5.0] {
            assert_relative_eq!(y.value(t), x1_closed(t - 2.0), max_relative = 1e-8);
        }
    }

    #[test]
    fn wronskian_decays_with_the_damping_integral() {
        let eq = damped_32();
        let pair = fundamental_system(&eq, 0.0, 3.0, 1e-10).unwrap();
        assert_relative_eq!(pair.wronskian_at(1.0), (-3.0_f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn boundary_kernel_matches_direct_formula() {
        let eq = damped_32();
        let g = GreenKernel::new(&eq, 1.0, 1e-10).unwrap();
        let slice = g.slice(0.3).unwrap();
        let expected = |t: f64, s: f64| {
            let x = if t >= s { x2_closed(t - s) } else { 0.0 };
            x - x2_closed(t) * x2_closed(1.0 - s) / x2_closed(1.0)
        };
        for &t in &[0.1, 0.3, 0.7, 0.95] {
            assert_relative_eq!(
                g.value(&slice, t),
                expected(t, 0.3),
                max_relative = 1e-7,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn resonant_boundary_problem_is_rejected() {
        // x'' + x = 0 with omega = pi: the boundary solution sin returns to
        // zero, so no kernel exists.
        let eq = EquationSpec::constant(0.0, 1.0);
        let r = GreenKernel::new(&eq, std::f64::consts::PI, 1e-10);
        assert!(matches!(r, Err(KernelError::SingularBoundary { .. })));
    }

    #[test]
    fn forcing_enters_solve_ivp() {
        // x'' + x = 1 from rest: x = 1 - cos t.
        let eq = EquationSpec::constant(0.0, 1.0)
            .with_forcing(crate::expr::CoefficientExpr::constant(1.0));
        let traj = solve_ivp(&eq, 0.0, 0.0, 0.0, 10.0, 1e-10).unwrap();
        for &t in &[1.0, 4.0, 9.0] {
            assert_relative_eq!(traj.value(t), 1.0 - t.cos(), epsilon = 1e-8);
        }
    }
}
