//! Equation builders shared by unit tests across modules.

use crate::equation::EquationSpec;
use crate::expr::CoefficientExpr;

fn sin2() -> CoefficientExpr {
    CoefficientExpr::Prod {
        args: vec![
            CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
            CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
        ],
    }
}

fn cos_sin() -> CoefficientExpr {
    CoefficientExpr::Prod {
        args: vec![
            CoefficientExpr::Cos {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
            CoefficientExpr::Sin {
                amp: 1.0,
                freq: 1.0,
                phase: 0.0,
            },
        ],
    }
}

/// Equation with fundamental system {e^-t cos t + sin t, sin t} and period
/// pi. Its mean damping is positive, yet the bounded mode sin t never
/// decays: the Floquet multipliers are real (-1 and -e^-pi), which is
/// exactly the situation the classification guards refuse to certify.
pub(crate) fn decoy() -> EquationSpec {
    let den = CoefficientExpr::Sum {
        args: vec![CoefficientExpr::constant(1.0), cos_sin()],
    };
    let a = CoefficientExpr::Quot {
        num: Box::new(CoefficientExpr::Sum {
            args: vec![
                CoefficientExpr::Scale {
                    factor: 2.0,
                    arg: Box::new(sin2()),
                },
                cos_sin(),
            ],
        }),
        den: Box::new(den.clone()),
    };
    let b = CoefficientExpr::Quot {
        num: Box::new(CoefficientExpr::Sum {
            args: vec![
                sin2(),
                CoefficientExpr::Scale {
                    factor: -1.0,
                    arg: Box::new(cos_sin()),
                },
            ],
        }),
        den: Box::new(den),
    };
    EquationSpec::new(a, b).with_period(std::f64::consts::PI)
}

/// Hill-type oscillator x'' + a x' + (1 + 0.99 sin t) x = 0 with period
/// 2 pi; the stability threshold in `a` sits at sqrt(3.98).
pub(crate) fn hill(a: f64) -> EquationSpec {
    let b = CoefficientExpr::Sum {
        args: vec![
            CoefficientExpr::constant(1.0),
            CoefficientExpr::Sin {
                amp: 0.99,
                freq: 1.0,
                phase: 0.0,
            },
        ],
    };
    EquationSpec::new(CoefficientExpr::constant(a), b).with_period(std::f64::consts::TAU)
}
