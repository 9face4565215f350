//! Residuals, compatibility conditions and regularity checks.

use nalgebra::DVector;
use serde::Serialize;

use super::problem::{ProblemKind, ProblemSpec};
use super::propagate::SolutionBundle;
use crate::error::{Error, Result};
use crate::fracops::{
    caputo_derivative_with_traces, estimate_holder_exponent, holder_seminorm, inf_norm, rl_derivative, HolderReport,
    SampledPath, C64,
};
use crate::opalgebra::{default_t_grid, interp_norm_with, MatrixOperator, ShiftedSolver};

/// Leading fraction of the grid left out of the residual.
pub const RESIDUAL_SKIP: f64 = 0.02;
/// Intervals used to sample the forcing for the compatibility checks.
pub const REPORT_GRID: usize = 1024;
/// Largest growth of a condition's value across a refinement sweep still read as stable.
pub const STABLE_GROWTH: f64 = 1.5;
/// Exponent slack allowed by [`regularity_verifier`].
pub const EXPONENT_SLACK: f64 = 0.07;

/// `‖D u - A u - f‖_∞` past the first [`RESIDUAL_SKIP`] of the grid, with `D` the
/// kind's fractional derivative recomputed by product integration.
pub fn residual_check(b: &SolutionBundle, p: &ProblemSpec) -> Result<f64> {
    let u = &b.u;
    let d = match p.kind {
        ProblemKind::Caputo => {
            let u0 = p.u0.clone().ok_or_else(|| Error::InvalidProblem("missing u0".into()))?;
            caputo_derivative_with_traces(u, p.alpha, &u0, p.u1.as_ref())?
        }
        ProblemKind::Abstract | ProblemKind::RiemannLiouville => rl_derivative(u, p.alpha)?,
    };
    let f = p.forcing.sample(u.dim(), u.t_end(), u.intervals())?;
    let r = d.values() - u.apply_matrix(p.operator.entries())?.values() - f.values();
    let k0 = (RESIDUAL_SKIP * u.intervals() as f64).ceil() as usize;
    Ok((k0.max(1)..=u.intervals()).map(|k| inf_norm(r.column(k).iter())).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// How a condition's value is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// Value must be finite at each size and stable under refinement.
    Bounded,
    /// Value must not exceed the threshold.
    Vanishing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatibilityEntry {
    pub id: String,
    pub locus: String,
    pub condition: ConditionKind,
    pub value: f64,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
}

impl CompatibilityEntry {
    fn bounded(id: &str, locus: String, value: f64) -> Self {
        let verdict = if value.is_finite() { Verdict::Pass } else { Verdict::Fail };
        Self { id: id.into(), locus, condition: ConditionKind::Bounded, value, threshold: None, verdict }
    }

    fn vanishing(id: &str, locus: String, value: f64, threshold: f64) -> Self {
        let verdict = if value <= threshold { Verdict::Pass } else { Verdict::Fail };
        Self { id: id.into(), locus, condition: ConditionKind::Vanishing, value, threshold: Some(threshold), verdict }
    }

    pub fn pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub dim: usize,
    pub entries: Vec<CompatibilityEntry>,
    pub overall: bool,
}

impl CompatibilityReport {
    pub fn entry(&self, id: &str) -> Option<&CompatibilityEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Size of `x` in the scale `(X, D(A))_θ`; `θ >= 1` steps through `D(A)`.
fn interp_measure(op: &MatrixOperator, solver: &ShiftedSolver, grid: &[f64], x: &DVector<C64>, theta: f64) -> Result<f64> {
    if theta <= 1e-12 {
        return Ok(inf_norm(x.iter()));
    }
    if (theta - 1.0).abs() <= 1e-12 {
        return Ok(inf_norm(x.iter()).max(inf_norm(op.apply(x).iter())));
    }
    if theta > 1.0 {
        let ax = op.apply(x);
        return Ok(inf_norm(x.iter()).max(interp_measure(op, solver, grid, &ax, theta - 1.0)?));
    }
    interp_norm_with(solver, op.lambda0(), theta, x, grid)
}

fn describe(theta: f64) -> String {
    if (theta - 1.0).abs() <= 1e-12 {
        "D(A)".into()
    } else {
        format!("interpolation class θ = {theta:.4}")
    }
}

/// One-sided second-order derivative at `t = 0`.
fn derivative_at_zero(f: &SampledPath) -> DVector<C64> {
    let v = f.values();
    (v.column(1) * C64::new(4.0, 0.0) - v.column(0) * C64::new(3.0, 0.0) - v.column(2)) * C64::new(1.0 / (2.0 * f.step()), 0.0)
}

/// Evaluates the conditions that characterize Hölder (`beta_target`) or
/// interpolation-space (`theta_target`) regularity of the solution.
///
/// Values are measured at the operator's own dimension; whether a
/// `bounded` value is really bounded only shows under refinement, see
/// [`compatibility_sweep`].
pub fn compatibility_report(p: &ProblemSpec) -> Result<CompatibilityReport> {
    p.validate()?;
    let op = &p.operator;
    let alpha = p.alpha;
    let d = op.dim();
    let solver = ShiftedSolver::new(op);
    let grid = default_t_grid(op);
    let f = p.forcing.sample(d, p.t_end, REPORT_GRID)?;
    let zero = DVector::<C64>::zeros(d);
    let u0 = p.u0.clone().unwrap_or_else(|| zero.clone());
    let u1 = p.u1.clone().unwrap_or_else(|| zero.clone());
    let g0 = p.g0.clone().unwrap_or_else(|| zero.clone());
    let f0 = f.value(0);
    let mut entries = Vec::new();
    let measure = |x: &DVector<C64>, th: f64| interp_measure(op, &solver, &grid, x, th);

    if let Some(beta) = p.beta_target {
        if !(beta < alpha) || (beta - 1.0).abs() < 1e-12 {
            return Err(Error::Domain(format!("β must lie in (0, α) without 1, got {beta}")));
        }
        let holder = if beta < 1.0 { holder_seminorm(&f, beta, 0)? } else { holder_seminorm(&f, beta - 1.0, 1)? };
        entries.push(CompatibilityEntry::bounded("f_holder", format!("forcing in C^{beta}"), holder));
        match p.kind {
            ProblemKind::Abstract | ProblemKind::RiemannLiouville => {
                entries.push(CompatibilityEntry::bounded(
                    "f0_interp",
                    format!("f(0) in {}", describe(beta / alpha)),
                    measure(&f0, beta / alpha)?,
                ));
                if beta > 1.0 {
                    let f1 = derivative_at_zero(&f);
                    entries.push(CompatibilityEntry::bounded(
                        "f1_interp",
                        format!("f'(0) in {}", describe((beta - 1.0) / alpha)),
                        measure(&f1, (beta - 1.0) / alpha)?,
                    ));
                }
                if p.kind == ProblemKind::RiemannLiouville {
                    if (beta - (alpha - 1.0)).abs() < 1e-12 {
                        return Err(Error::Domain("β = α - 1 is excluded for the Riemann–Liouville problem".into()));
                    }
                    if beta < alpha - 1.0 {
                        let th = (beta + 1.0) / alpha;
                        entries.push(CompatibilityEntry::bounded(
                            "g0_interp",
                            format!("g0 in {}", describe(th)),
                            measure(&g0, th)?,
                        ));
                    } else {
                        entries.push(CompatibilityEntry::vanishing(
                            "g0_zero",
                            "g0 = 0 when β > α - 1".into(),
                            inf_norm(g0.iter()),
                            0.0,
                        ));
                    }
                }
            }
            ProblemKind::Caputo => {
                entries.push(CompatibilityEntry::bounded("u0_domain", "u0 in D(A)".into(), measure(&u0, 1.0)?));
                let w = op.apply(&u0) + &f0;
                entries.push(CompatibilityEntry::bounded(
                    "au0_f0_interp",
                    format!("A u0 + f(0) in {}", describe(beta / alpha)),
                    measure(&w, beta / alpha)?,
                ));
                if alpha > 1.0 {
                    if beta < 1.0 {
                        let th = 1.0 - (1.0 - beta) / alpha;
                        entries.push(CompatibilityEntry::bounded(
                            "u1_interp",
                            format!("u1 in {}", describe(th)),
                            measure(&u1, th)?,
                        ));
                    } else {
                        entries.push(CompatibilityEntry::bounded("u1_domain", "u1 in D(A)".into(), measure(&u1, 1.0)?));
                        let w1 = op.apply(&u1) + derivative_at_zero(&f);
                        let th = (beta - 1.0) / alpha;
                        entries.push(CompatibilityEntry::bounded(
                            "au1_f1_interp",
                            format!("A u1 + f'(0) in {}", describe(th)),
                            measure(&w1, th)?,
                        ));
                    }
                }
            }
        }
    }

    if let Some(theta) = p.theta_target {
        if !(theta < 1.0) {
            return Err(Error::Domain(format!("θ must lie in (0,1), got {theta}")));
        }
        let mut f_sup = 0.0f64;
        let stride = (REPORT_GRID / 64).max(1);
        for k in (0..=REPORT_GRID).step_by(stride) {
            f_sup = f_sup.max(measure(&f.value(k), theta)?);
        }
        entries.push(CompatibilityEntry::bounded(
            "f_bounded_interp",
            format!("forcing bounded in {}", describe(theta)),
            f_sup,
        ));
        if p.kind == ProblemKind::Caputo {
            entries.push(CompatibilityEntry::bounded(
                "au0_interp",
                format!("u0 in D(A), A u0 in {}", describe(theta)),
                measure(&op.apply(&u0), theta)?.max(inf_norm(u0.iter())),
            ));
            if alpha > 1.0 {
                let inv = 1.0 / alpha;
                if (theta - inv).abs() < 1e-12 {
                    return Err(Error::Domain("θ = 1/α is excluded".into()));
                }
                let th = if theta < inv { theta + 1.0 - inv } else { theta - inv + 1.0 };
                entries.push(CompatibilityEntry::bounded("u1_theta", format!("u1 in {}", describe(th)), measure(&u1, th)?));
            }
        }
    }

    let overall = entries.iter().all(|e| e.pass());
    Ok(CompatibilityReport { dim: d, entries, overall })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub id: String,
    /// Value at each problem size, coarsest first.
    pub values: Vec<f64>,
    /// Largest ratio of consecutive values.
    pub growth: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub dims: Vec<usize>,
    pub entries: Vec<SweepEntry>,
    pub overall: bool,
}

/// Reports on a family of discretizations of one problem, judging each
/// `bounded` condition by its growth between consecutive sizes.
pub fn compatibility_sweep(problems: &[ProblemSpec]) -> Result<SweepReport> {
    if problems.len() < 2 {
        return Err(Error::Domain("a refinement sweep needs at least two problems".into()));
    }
    let reports = problems.iter().map(compatibility_report).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for first in &reports[0].entries {
        let values = reports
            .iter()
            .map(|r| r.entry(&first.id).map(|e| e.value).ok_or_else(|| Error::Shape(format!("condition {} missing", first.id))))
            .collect::<Result<Vec<f64>>>()?;
        let growth = values
            .windows(2)
            .map(|w| if w[0] == 0.0 && w[1] == 0.0 { 1.0 } else { w[1] / w[0] })
            .fold(0.0, f64::max);
        let pass = match first.condition {
            ConditionKind::Bounded => values.iter().all(|v| v.is_finite()) && growth <= STABLE_GROWTH,
            ConditionKind::Vanishing => reports.iter().all(|r| r.entry(&first.id).is_some_and(|e| e.pass())),
        };
        entries.push(SweepEntry {
            id: first.id.clone(),
            values,
            growth,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        });
    }
    let overall = entries.iter().all(|e| e.verdict == Verdict::Pass);
    Ok(SweepReport { dims: reports.iter().map(|r| r.dim).collect(), entries, overall })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub beta: f64,
    pub exponent_frac_deriv: f64,
    pub exponent_au: f64,
    pub required: f64,
    pub pass: bool,
}

/// Fitted Hölder exponents of the fractional derivative and of `Au`;
/// passes iff both reach `β - EXPONENT_SLACK`.
pub fn regularity_verifier(b: &SolutionBundle, beta: f64) -> RegularityReport {
    let fd: HolderReport = estimate_holder_exponent(&b.frac_deriv);
    let au = estimate_holder_exponent(&b.au);
    let required = beta - EXPONENT_SLACK;
    RegularityReport {
        beta,
        exponent_frac_deriv: fd.fitted_exponent,
        exponent_au: au.fitted_exponent,
        required,
        pass: fd.fitted_exponent >= required && au.fitted_exponent >= required,
    }
}
