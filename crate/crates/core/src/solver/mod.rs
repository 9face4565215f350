//! Fractional Cauchy problems `D^α u = A u + f` in finite dimensions.
//!
//! Three problem kinds share one representation: in the Laplace variable
//! the solution is `(μ^α - A)^{-1}` applied to a source assembled from the
//! data, and it is recovered on a keyhole contour.

mod diagnostics;
mod problem;
mod propagate;

pub use diagnostics::{
    compatibility_report, compatibility_sweep, regularity_verifier, residual_check, CompatibilityEntry,
    CompatibilityReport, ConditionKind, RegularityReport, SweepEntry, SweepReport, Verdict, EXPONENT_SLACK,
    REPORT_GRID, RESIDUAL_SKIP, STABLE_GROWTH,
};
pub use problem::{Forcing, ForcingDocument, ForcingFn, ProblemDocument, ProblemKind, ProblemSpec};
pub use propagate::{
    check_contour, default_contour, propagator_h, propagator_h_integral, propagator_s, solve, solve_default,
    solve_with, ContourSummary, SolutionBundle,
};
