//! Certification of nonoscillation and exponential stability for the scalar
//! equation x'' + a(t) x' + b(t) x = f(t).
//!
//! The crate has two halves. The certification half implements a family of
//! sufficient criteria, each returning a [`criteria::Certificate`] with the
//! witnesses that made it pass and the margin by which it passed; a criterion
//! that does not apply says so rather than failing. The verification half
//! solves the equation numerically and checks the claims empirically: decay
//! rate fits, positivity scans, kernel identities, and Floquet multipliers
//! for periodic coefficients.
//!
//! All computation is deterministic. Searches use fixed grids and fixed
//! simplex restarts, integration uses a fixed adaptive rule, and parallel
//! sections merge their results in a fixed order, so every artifact is
//! byte-for-byte reproducible.

pub mod criteria;
pub mod equation;
pub mod expr;
pub mod floquet;
pub mod fundamental;
pub mod oracle;
pub mod problem;
pub mod quad;
pub mod report;
pub mod search;
pub mod solve;
#[cfg(test)]
pub(crate) mod testutil;

pub use criteria::{certify_all, summarize, Certificate, CertifyConfig, Claim, Verdict};
pub use equation::EquationSpec;
pub use expr::{CoefficientExpr, Side};
pub use floquet::{classify, Classification, FloquetResult};
pub use problem::{parse_problem, ProblemFile, RunConfig};
