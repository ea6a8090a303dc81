//! Floquet analysis of periodic equations: the monodromy matrix over one
//! period, its multipliers, and a guarded classification of long-term
//! behavior.
//!
//! The classification rests on the multipliers being a complex pair. Real
//! multipliers defeat it even when the mean damping is positive, so they
//! route to a dedicated guard-failed outcome, and the complex case is
//! additionally protected by two independent guards: an arithmetic zone
//! test on the reduced potential, and observed zero spacings staying away
//! from twice the period.

use crate::equation::EquationSpec;
use crate::fundamental::{fundamental_system, solve_homogeneous, KernelError};
use crate::quad::{QuadConfig, QuadError};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("Floquet analysis needs a declared period")]
    NotPeriodic,
    #[error("Floquet analysis applies to the homogeneous equation; remove the forcing term")]
    Forced,
    #[error("zone arithmetic needs a positive lower bound on the reduced potential, got {p}")]
    NonpositiveZoneBound { p: f64 },
    #[error(
        "Wronskian mismatch at the period: direct {direct:e} vs Liouville {liouville:e}"
    )]
    WronskianMismatch { direct: f64, liouville: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// The fundamental pair evaluated after one period, with the Wronskian
/// computed twice: directly from the entries and from the damping integral.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy {
    pub omega: f64,
    pub x1_end: f64,
    pub x2_end: f64,
    pub x1p_end: f64,
    pub x2p_end: f64,
    pub trace: f64,
    pub w_direct: f64,
    pub w_liouville: f64,
}

/// Integrate the fundamental pair over one period. The two Wronskian
/// computations must agree to 1e-8, relative above one and absolute below,
/// since the direct determinant loses relative accuracy exactly when the
/// monodromy is strongly contracting.
pub fn monodromy(eq: &EquationSpec, tol: f64) -> Result<Monodromy, FloquetError> {
    let omega = eq.period.ok_or(FloquetError::NotPeriodic)?;
    if eq.f.is_some() {
        return Err(FloquetError::Forced);
    }
    let t0 = eq.t_start;
    let t_end = t0 + omega;
    let pair = fundamental_system(eq, t0, t_end, tol.min(1e-12))?;
    let quad_cfg = QuadConfig {
        tol: tol.min(1e-10),
        ..QuadConfig::default()
    };
    let w_liouville = (-eq.damping_integral(t0, t_end, &quad_cfg)?).exp();
    let w_direct = pair.wronskian_at(t_end);
    if (w_direct - w_liouville).abs() > 1e-8 * w_liouville.abs().max(1.0) {
        return Err(FloquetError::WronskianMismatch {
            direct: w_direct,
            liouville: w_liouville,
        });
    }
    let [x1_end, x1p_end] = pair.x1.state(t_end);
    let [x2_end, x2p_end] = pair.x2.state(t_end);
    Ok(Monodromy {
        omega,
        x1_end,
        x2_end,
        x1p_end,
        x2p_end,
        trace: x1_end + x2p_end,
        w_direct,
        w_liouville,
    })
}

/// Roots of l^2 - trace l + w, ordered by descending modulus. A complex
/// pair has modulus sqrt(w); the real case uses the sign-matched root first
/// and recovers the second from the product, which keeps both accurate when
/// they differ by many orders of magnitude.
pub fn multipliers(trace: f64, w: f64) -> [Complex64; 2] {
    let disc = trace * trace - 4.0 * w;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let l1 = if trace >= 0.0 {
            0.5 * (trace + s)
        } else {
            0.5 * (trace - s)
        };
        let l2 = if l1 != 0.0 { w / l1 } else { 0.0 };
        [Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)]
    } else {
        let r = w.sqrt();
        let theta = (trace / (2.0 * r)).clamp(-1.0, 1.0).acos();
        [
            Complex64::from_polar(r, theta),
            Complex64::from_polar(r, -theta),
        ]
    }
}

/// Zero-gap statistics from a fan of solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingEvidence {
    pub min_gap: Option<f64>,
    pub max_gap: Option<f64>,
    /// Every fanned solution keeps producing zeros: at least two of them,
    /// with no zero-free stretch longer than max(2 omega, largest observed
    /// gap) at either end.
    pub oscillatory: bool,
}

struct FanScan {
    spacing: SpacingEvidence,
    /// Some observed gap lies within 1% of twice the period.
    gap_near_two_omega: bool,
    /// Some solution's state norm at the horizon exceeds its norm at omega.
    growth_exceeded: bool,
}

fn fan_scan(eq: &EquationSpec, horizon: f64, tol: f64) -> Result<FanScan, FloquetError> {
    let omega = eq.period.ok_or(FloquetError::NotPeriodic)?;
    let t0 = eq.t_start;
    let span = horizon.max(10.0 * omega);
    let t_end = t0 + span;
    let runs: Vec<Result<(Vec<f64>, f64, f64), KernelError>> = (0..32)
        .into_par_iter()
        .map(|j| {
            let phi = j as f64 * std::f64::consts::PI / 32.0;
            let traj = solve_homogeneous(eq, t0, phi.cos(), phi.sin(), t_end, tol)?;
            let norm = |t: f64| {
                let [x, v] = traj.state(t);
                x.hypot(v)
            };
            Ok((
                traj.zeros().zeros.clone(),
                norm(t0 + omega),
                norm(t_end),
            ))
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut any_gaps = false;
    let mut gap_near_two_omega = false;
    let mut growth_exceeded = false;
    let mut per_solution: Vec<(usize, f64, f64)> = Vec::new();
    for run in runs {
        let (zeros, at_omega, at_end) = run?;
        for pair in zeros.windows(2) {
            let gap = pair[1] - pair[0];
            any_gaps = true;
            min_gap = min_gap.min(gap);
            max_gap = max_gap.max(gap);
            if (gap - 2.0 * omega).abs() < 0.02 * omega {
                gap_near_two_omega = true;
            }
        }
        if at_end > at_omega {
            growth_exceeded = true;
        }
        let first = zeros.first().copied().unwrap_or(f64::INFINITY);
        let last = zeros.last().copied().unwrap_or(f64::NEG_INFINITY);
        per_solution.push((zeros.len(), first, last));
    }
    // The slack absorbs rounding when a terminal gap ties the largest
    // interior gap exactly, as happens for constant coefficients.
    let window = (2.0 * omega).max(max_gap) * (1.0 + 1e-6);
    let oscillatory = per_solution
        .iter()
        .all(|&(n, first, last)| n >= 2 && first - t0 <= window && t_end - last <= window);
    Ok(FanScan {
        spacing: SpacingEvidence {
            min_gap: any_gaps.then_some(min_gap),
            max_gap: any_gaps.then_some(max_gap),
            oscillatory,
        },
        gap_near_two_omega,
        growth_exceeded,
    })
}

/// Observed spacing of solution zeros over `horizon` (at least ten
/// periods), from a fan of 32 initial phases (cos phi, sin phi).
pub fn zero_spacing(eq: &EquationSpec, horizon: f64) -> Result<SpacingEvidence, FloquetError> {
    Ok(fan_scan(eq, horizon, 1e-10)?.spacing)
}

/// Outcome of the zone test: which nonoscillation zone, if any, contains
/// the period, and whether the period sits within rounding distance of a
/// zone boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneCheck {
    pub in_zone: bool,
    pub k: Option<usize>,
    pub near_boundary: bool,
}

/// Tests whether omega lies in one of the admissible zones
/// ((k-1) pi / (2 sqrt(P)), k pi / (2 sqrt(Q))) for k up to kmax, where
/// P and Q bound the reduced potential. The first zone is closed on the
/// right, later ones open; zone k exists only while (k-1)/k < sqrt(P/Q).
pub fn zone_check(p: f64, q: f64, omega: f64, kmax: usize) -> Result<ZoneCheck, FloquetError> {
    if !(p > 0.0) {
        return Err(FloquetError::NonpositiveZoneBound { p });
    }
    let q = q.max(p);
    let ratio = (p / q).sqrt();
    let btol = 1e-9 * (1.0 + omega.abs());
    let mut near_boundary = false;
    for k in 1..=kmax {
        if (k as f64 - 1.0) / k as f64 >= ratio {
            break;
        }
        let lo = (k as f64 - 1.0) * std::f64::consts::PI / (2.0 * p.sqrt());
        let hi = k as f64 * std::f64::consts::PI / (2.0 * q.sqrt());
        if (omega - lo).abs() <= btol || (omega - hi).abs() <= btol {
            near_boundary = true;
        }
        let inside = if k == 1 {
            omega > 0.0 && omega <= hi
        } else {
            omega > lo && omega < hi
        };
        if inside {
            return Ok(ZoneCheck {
                in_zone: true,
                k: Some(k),
                near_boundary,
            });
        }
    }
    Ok(ZoneCheck {
        in_zone: false,
        k: None,
        near_boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    ExpStable,
    UnstableGrowing,
    BoundedMarginal,
    RealRootGuardFailed,
    Undecided,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::ExpStable => "EXP_STABLE",
            Classification::UnstableGrowing => "UNSTABLE_GROWING",
            Classification::BoundedMarginal => "BOUNDED_MARGINAL",
            Classification::RealRootGuardFailed => "REAL_ROOT_GUARD_FAILED",
            Classification::Undecided => "UNDECIDED",
        }
    }
}

/// Full Floquet analysis of one equation.
#[derive(Debug)]
pub struct FloquetResult {
    pub mono: Monodromy,
    pub lambda: [Complex64; 2],
    pub classification: Classification,
    /// Zone test on the reduced potential; absent when the damping has
    /// jumps or the potential's lower bound is not positive.
    pub zone: Option<ZoneCheck>,
    pub spacing: SpacingEvidence,
    pub damping_mean_integral: f64,
}

/// Classifies long-term behavior by the sign of the damping integral over
/// one period, provided the multipliers form a complex pair and either
/// guard holds: the zone test, or every observed zero gap staying at least
/// 1% away from twice the period. An exponential-stability verdict is
/// additionally cross-checked against the fanned solutions, and demoted if
/// any of them grew between one period and the horizon.
pub fn classify(eq: &EquationSpec, horizon: f64, tol: f64) -> Result<FloquetResult, FloquetError> {
    let mono = monodromy(eq, tol)?;
    let omega = mono.omega;
    let t0 = eq.t_start;
    let lambda = multipliers(mono.trace, mono.w_liouville);
    let fan = fan_scan(eq, horizon, tol.clamp(1e-12, 1e-8))?;
    let zone = if eq.a.breakpoints_in(t0, t0 + omega).is_empty() {
        let p = eq.reduced_potential();
        let bounds = p.ess_bounds(t0, t0 + omega, 1e4);
        match zone_check(bounds.inf, bounds.sup, omega, 32) {
            Ok(z) => Some(z),
            Err(FloquetError::NonpositiveZoneBound { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let quad_cfg = QuadConfig {
        tol: tol.min(1e-10),
        ..QuadConfig::default()
    };
    let int_a = eq.damping_integral(t0, t0 + omega, &quad_cfg)?;
    let ra = eq.a.ess_bounds(t0, t0 + omega, 1e4);
    let mean_tol = (tol * omega * (1.0 + ra.inf.abs().max(ra.sup.abs()))).max(1e-9);

    let real_pair = lambda[0].im == 0.0;
    let guard_ok = zone.map_or(false, |z| z.in_zone)
        || (fan.spacing.oscillatory && !fan.gap_near_two_omega);
    let mut classification = if real_pair || !guard_ok {
        Classification::RealRootGuardFailed
    } else if int_a > mean_tol {
        Classification::ExpStable
    } else if int_a < -mean_tol {
        Classification::UnstableGrowing
    } else {
        Classification::BoundedMarginal
    };
    if classification == Classification::ExpStable && fan.growth_exceeded {
        classification = Classification::Undecided;
    }
    Ok(FloquetResult {
        mono,
        lambda,
        classification,
        zone,
        spacing: fan.spacing,
        damping_mean_integral: int_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::CoefficientExpr;
    use crate::testutil::decoy;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{E, PI, TAU};

    #[test]
    fn full_rotation_monodromy_is_identity() {
        let eq = EquationSpec::constant(0.0, 1.0).with_period(TAU);
        let m = monodromy(&eq, 1e-10).unwrap();
        assert_abs_diff_eq!(m.x1_end, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.x2_end, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.x1p_end, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.x2p_end, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m.trace, 2.0, max_relative = 1e-9);
        assert_relative_eq!(m.w_direct, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn wronskian_follows_the_damping_integral() {
        let eq = EquationSpec::constant(3.0, 2.0).with_period(1.0);
        let m = monodromy(&eq, 1e-10).unwrap();
        assert_relative_eq!(m.w_liouville, (-3.0_f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(m.w_direct, (-3.0_f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn decoy_monodromy_matches_the_closed_form() {
        let m = monodromy(&decoy(), 1e-10).unwrap();
        let w = (-PI).exp();
        assert_relative_eq!(m.trace, -1.0 - w, max_relative = 1e-9);
        assert_relative_eq!(m.w_liouville, w, max_relative = 1e-9);
        assert_relative_eq!(m.x1_end, -w, max_relative = 1e-7);
        assert_abs_diff_eq!(m.x2_end, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn repeated_unit_multiplier() {
        let [l1, l2] = multipliers(2.0, 1.0);
        assert_abs_diff_eq!(l1.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l2.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l1.im, 0.0);
    }

    #[test]
    fn complex_multipliers_match_constant_coefficient_roots() {
        let eq = EquationSpec::constant(2.0, 2.0).with_period(1.0);
        let m = monodromy(&eq, 1e-10).unwrap();
        let [l1, l2] = multipliers(m.trace, m.w_liouville);
        assert_relative_eq!(l1.norm(), (-1.0_f64).exp(), max_relative = 1e-6);
        assert_relative_eq!(l1.arg(), 1.0, max_relative = 1e-6);
        assert_relative_eq!(l2.arg(), -1.0, max_relative = 1e-6);
    }

    #[test]
    fn real_multipliers_split_accurately() {
        let eq = EquationSpec::constant(0.0, -1.0).with_period(1.0);
        let m = monodromy(&eq, 1e-10).unwrap();
        let [l1, l2] = multipliers(m.trace, m.w_liouville);
        assert_eq!(l1.im, 0.0);
        assert_relative_eq!(l1.re, E, max_relative = 1e-6);
        assert_relative_eq!(l2.re, 1.0 / E, max_relative = 1e-6);
    }

    #[test]
    fn harmonic_zero_gaps_are_pi() {
        let eq = EquationSpec::constant(0.0, 1.0).with_period(TAU);
        let s = zero_spacing(&eq, 70.0).unwrap();
        assert!(s.oscillatory);
        assert_relative_eq!(s.min_gap.unwrap(), PI, max_relative = 1e-6);
        assert_relative_eq!(s.max_gap.unwrap(), PI, max_relative = 1e-6);
    }

    #[test]
    fn damped_spiral_zero_gaps_are_pi() {
        let eq = EquationSpec::constant(2.0, 2.0).with_period(1.0);
        let s = zero_spacing(&eq, 10.0).unwrap();
        assert!(s.oscillatory);
        assert_relative_eq!(s.min_gap.unwrap(), PI, max_relative = 1e-5);
        assert_relative_eq!(s.max_gap.unwrap(), PI, max_relative = 1e-5);
    }

    #[test]
    fn unit_potential_zones_cover_short_periods() {
        let z = zone_check(1.0, 1.0, 1.0, 32).unwrap();
        assert_eq!((z.in_zone, z.k), (true, Some(1)));

        let z = zone_check(1.0, 4.0, 0.7, 32).unwrap();
        assert_eq!((z.in_zone, z.k), (true, Some(1)));
        let z = zone_check(1.0, 4.0, 1.0, 32).unwrap();
        assert!(!z.in_zone);

        let z = zone_check(1.0, 1.0, 0.5 * PI, 32).unwrap();
        assert_eq!((z.in_zone, z.k), (true, Some(1)));
        assert!(z.near_boundary);

        assert!(zone_check(0.0, 1.0, 1.0, 32).is_err());
    }

    #[test]
    fn stable_spiral_is_classified_exponentially_stable() {
        let eq = EquationSpec::constant(2.0, 2.0).with_period(1.0);
        let r = classify(&eq, 200.0, 1e-10).unwrap();
        assert_eq!(r.classification, Classification::ExpStable);
        assert_eq!(r.zone.unwrap().k, Some(1));
    }

    #[test]
    fn negative_damping_is_classified_growing() {
        let eq = EquationSpec::constant(-2.0, 2.0).with_period(1.0);
        let r = classify(&eq, 20.0, 1e-10).unwrap();
        assert_eq!(r.classification, Classification::UnstableGrowing);
        assert_relative_eq!(r.lambda[0].norm(), E, max_relative = 1e-6);
    }

    #[test]
    fn conservative_oscillator_is_marginal() {
        let eq = EquationSpec::constant(0.0, 1.0).with_period(1.0);
        let r = classify(&eq, 20.0, 1e-10).unwrap();
        assert_eq!(r.classification, Classification::BoundedMarginal);
    }

    #[test]
    fn real_multipliers_defeat_the_classification() {
        let r = classify(&decoy(), 200.0, 1e-10).unwrap();
        assert_eq!(r.classification, Classification::RealRootGuardFailed);
        assert!(r.damping_mean_integral > 0.0);
        assert_eq!(r.lambda[0].im, 0.0);
        assert_relative_eq!(r.lambda[0].re, -1.0, max_relative = 1e-8);
        assert_relative_eq!(r.lambda[1].re, -(-PI).exp(), max_relative = 1e-6);
    }

    #[test]
    fn forcing_and_missing_period_are_rejected() {
        let eq = EquationSpec::constant(3.0, 2.0);
        assert!(matches!(
            monodromy(&eq, 1e-10),
            Err(FloquetError::NotPeriodic)
        ));
        let forced = EquationSpec::constant(3.0, 2.0)
            .with_period(1.0)
            .with_forcing(CoefficientExpr::constant(1.0));
        assert!(matches!(monodromy(&forced, 1e-10), Err(FloquetError::Forced)));
    }
}
