//! Problem descriptions: the equation kind, operator, forcing and initial data.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::{PowerTerm, SampledPath, C64};
use crate::opalgebra::{Entry, MatrixDescriptor, MatrixOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `B^α u - A u = f`, all traces zero.
    Abstract,
    /// Riemann–Liouville derivative with `B^{α-1} u(0) = g₀`, `α ∈ (1,2)`.
    RiemannLiouville,
    /// Caputo derivative with `u(0) = u₀` and, for `α > 1`, `u'(0) = u₁`.
    Caputo,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemKind::Abstract => "abstract",
            ProblemKind::RiemannLiouville => "riemann_liouville",
            ProblemKind::Caputo => "caputo",
        };
        f.write_str(s)
    }
}

pub type ForcingFn = Arc<dyn Fn(f64) -> DVector<C64> + Send + Sync>;

/// Right-hand side `f(t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Constant(DVector<C64>),
    /// `coeff · t^exponent`, `exponent >= 0`.
    Power { exponent: f64, coeff: DVector<C64> },
    /// `Σ_k c_k t^k`.
    Polynomial(Vec<DVector<C64>>),
    /// Samples on the solve grid.
    Sampled(SampledPath),
    Function(ForcingFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant(v) => write!(f, "Constant({} components)", v.len()),
            Forcing::Power { exponent, .. } => write!(f, "Power(t^{exponent})"),
            Forcing::Polynomial(c) => write!(f, "Polynomial(degree {})", c.len().saturating_sub(1)),
            Forcing::Sampled(p) => write!(f, "Sampled({} intervals)", p.intervals()),
            Forcing::Function(_) => write!(f, "Function"),
        }
    }
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Constant(v) => v.iter().all(|z| z.norm() == 0.0),
            Forcing::Power { coeff, .. } => coeff.iter().all(|z| z.norm() == 0.0),
            Forcing::Polynomial(c) => c.iter().all(|v| v.iter().all(|z| z.norm() == 0.0)),
            Forcing::Sampled(p) => p.sup_norm() == 0.0,
            Forcing::Function(_) => false,
        }
    }

    /// Samples on `n` intervals of `[0, t_end]`.
    pub fn sample(&self, dim: usize, t_end: f64, n: usize) -> Result<SampledPath> {
        let check = |v: &DVector<C64>| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::Shape(format!("forcing has dimension {}, operator has {dim}", v.len())))
            }
        };
        match self {
            Forcing::Zero => SampledPath::zeros(t_end, n, dim),
            Forcing::Constant(v) => {
                check(v)?;
                SampledPath::from_fn(t_end, n, dim, |_| v.clone())
            }
            Forcing::Power { exponent, coeff } => {
                check(coeff)?;
                if *exponent < 0.0 {
                    return Err(Error::Domain("forcing exponent must be nonnegative".into()));
                }
                let p = SampledPath::from_parts(
                    t_end,
                    nalgebra::DMatrix::zeros(dim, n + 1),
                    vec![PowerTerm::new(*exponent, coeff.clone())],
                )?;
                Ok(p)
            }
            Forcing::Polynomial(cs) => {
                for c in cs {
                    check(c)?;
                }
                SampledPath::from_fn(t_end, n, dim, |t| {
                    let mut acc = DVector::zeros(dim);
                    for c in cs.iter().rev() {
                        acc = acc * C64::new(t, 0.0) + c;
                    }
                    acc
                })
            }
            Forcing::Sampled(p) => {
                if p.dim() != dim || p.intervals() != n || (p.t_end() - t_end).abs() > 1e-12 * t_end {
                    return Err(Error::Shape(format!(
                        "sampled forcing has {} intervals on [0, {}] in dimension {}; the solve needs {n} on [0, {t_end}] in dimension {dim}",
                        p.intervals(),
                        p.t_end(),
                        p.dim()
                    )));
                }
                Ok(p.clone())
            }
            Forcing::Function(f) => {
                let mut err = None;
                let p = SampledPath::from_fn(t_end, n, dim, |t| {
                    let v = f(t);
                    if v.len() != dim && err.is_none() {
                        err = Some(Error::Shape("forcing callback returned the wrong dimension".into()));
                    }
                    v
                });
                match err {
                    Some(e) => Err(e),
                    None => p,
                }
            }
        }
    }
}

/// Validated problem description.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub kind: ProblemKind,
    pub operator: MatrixOperator,
    pub forcing: Forcing,
    pub u0: Option<DVector<C64>>,
    pub u1: Option<DVector<C64>>,
    pub g0: Option<DVector<C64>>,
    pub t_end: f64,
    pub beta_target: Option<f64>,
    pub theta_target: Option<f64>,
}

impl ProblemSpec {
    /// Problem with zero forcing and no initial data; fill in the rest with the builder methods.
    pub fn new(kind: ProblemKind, alpha: f64, operator: MatrixOperator, t_end: f64) -> Self {
        Self {
            alpha,
            kind,
            operator,
            forcing: Forcing::Zero,
            u0: None,
            u1: None,
            g0: None,
            t_end,
            beta_target: None,
            theta_target: None,
        }
    }

    pub fn with_forcing(mut self, f: Forcing) -> Self {
        self.forcing = f;
        self
    }

    pub fn with_u0(mut self, v: DVector<C64>) -> Self {
        self.u0 = Some(v);
        self
    }

    pub fn with_u1(mut self, v: DVector<C64>) -> Self {
        self.u1 = Some(v);
        self
    }

    pub fn with_g0(mut self, v: DVector<C64>) -> Self {
        self.g0 = Some(v);
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta_target = Some(beta);
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_target = Some(theta);
        self
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        if !(a > 0.0 && a < 2.0) || a == 1.0 {
            return Err(Error::InvalidProblem(format!("α must lie in (0,1) ∪ (1,2), got {a}")));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidProblem(format!("t_end must be positive, got {}", self.t_end)));
        }
        let n = self.dim();
        for (name, v) in [("u0", &self.u0), ("u1", &self.u1), ("g0", &self.g0)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(Error::Shape(format!("{name} has length {}, operator dimension is {n}", v.len())));
                }
            }
        }
        match self.kind {
            ProblemKind::Abstract => {
                if self.u0.is_some() || self.u1.is_some() || self.g0.is_some() {
                    return Err(Error::InvalidProblem("the abstract problem takes no initial data".into()));
                }
            }
            ProblemKind::RiemannLiouville => {
                if a < 1.0 {
                    return Err(Error::InvalidProblem("the Riemann–Liouville problem needs α ∈ (1,2)".into()));
                }
                if self.g0.is_none() {
                    return Err(Error::InvalidProblem("the Riemann–Liouville problem needs g0".into()));
                }
                if self.u0.is_some() || self.u1.is_some() {
                    return Err(Error::InvalidProblem("the Riemann–Liouville problem takes only g0".into()));
                }
            }
            ProblemKind::Caputo => {
                if self.u0.is_none() {
                    return Err(Error::InvalidProblem("the Caputo problem needs u0".into()));
                }
                if (a > 1.0) != self.u1.is_some() {
                    return Err(Error::InvalidProblem("the Caputo problem needs u1 exactly when α > 1".into()));
                }
                if self.g0.is_some() {
                    return Err(Error::InvalidProblem("the Caputo problem does not take g0".into()));
                }
            }
        }
        if a * std::f64::consts::FRAC_PI_2 >= self.operator.phi() {
            return Err(Error::SectorViolation(format!(
                "α·π/2 = {:.4} is not below the operator's sector angle φ = {:.4}",
                a * std::f64::consts::FRAC_PI_2,
                self.operator.phi()
            )));
        }
        for (name, v) in [("beta_target", self.beta_target), ("theta_target", self.theta_target)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::InvalidProblem(format!("{name} must be positive, got {x}")));
                }
            }
        }
        Ok(())
    }

    /// Parse a JSON document; CSV forcing paths are resolved against `base_dir`.
    pub fn from_json_str(s: &str, base_dir: Option<&Path>) -> Result<Self> {
        let doc: ProblemDocument = serde_json::from_str(s)?;
        doc.into_spec(base_dir)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, path.parent())
    }
}

fn entries_to_vec(v: &[Entry]) -> DVector<C64> {
    DVector::from_iterator(
        v.len(),
        v.iter().map(|e| match *e {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }),
    )
}

/// JSON form of a forcing term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingDocument {
    Zero,
    Constant { value: Vec<Entry> },
    Power { exponent: f64, coeff: Vec<Entry> },
    Polynomial { coeffs: Vec<Vec<Entry>> },
    Csv { path: String },
}

/// JSON form of [`ProblemSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub alpha: f64,
    pub kind: ProblemKind,
    pub operator: MatrixDescriptor,
    #[serde(default = "zero_forcing")]
    pub forcing: ForcingDocument,
    #[serde(default)]
    pub u0: Option<Vec<Entry>>,
    #[serde(default)]
    pub u1: Option<Vec<Entry>>,
    #[serde(default)]
    pub g0: Option<Vec<Entry>>,
    pub t_end: f64,
    #[serde(default)]
    pub beta_target: Option<f64>,
    #[serde(default)]
    pub theta_target: Option<f64>,
}

fn zero_forcing() -> ForcingDocument {
    ForcingDocument::Zero
}

impl ProblemDocument {
    pub fn into_spec(self, base_dir: Option<&Path>) -> Result<ProblemSpec> {
        let forcing = match &self.forcing {
            ForcingDocument::Zero => Forcing::Zero,
            ForcingDocument::Constant { value } => Forcing::Constant(entries_to_vec(value)),
            ForcingDocument::Power { exponent, coeff } => Forcing::Power { exponent: *exponent, coeff: entries_to_vec(coeff) },
            ForcingDocument::Polynomial { coeffs } => Forcing::Polynomial(coeffs.iter().map(|c| entries_to_vec(c)).collect()),
            ForcingDocument::Csv { path } => {
                let p = Path::new(path);
                let full = match base_dir {
                    Some(d) if p.is_relative() => d.join(p),
                    _ => p.to_path_buf(),
                };
                Forcing::Sampled(SampledPath::read_csv(std::fs::File::open(&full)?)?)
            }
        };
        let spec = ProblemSpec {
            alpha: self.alpha,
            kind: self.kind,
            operator: self.operator.into_operator()?,
            forcing,
            u0: self.u0.as_deref().map(entries_to_vec),
            u1: self.u1.as_deref().map(entries_to_vec),
            g0: self.g0.as_deref().map(entries_to_vec),
            t_end: self.t_end,
            beta_target: self.beta_target,
            theta_target: self.theta_target,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn scalar_op(w: f64) -> MatrixOperator {
        MatrixOperator::from_real(DMatrix::from_element(1, 1, w), 0.0, 3.0).unwrap()
    }

    fn one() -> DVector<C64> {
        DVector::from_element(1, C64::new(1.0, 0.0))
    }

    #[test]
    fn invariants_per_kind() {
        let base = ProblemSpec::new(ProblemKind::Caputo, 1.5, scalar_op(-1.0), 1.0);
        assert!(base.clone().with_u0(one()).validate().is_err());
        assert!(base.clone().with_u0(one()).with_u1(one()).validate().is_ok());
        let c05 = ProblemSpec::new(ProblemKind::Caputo, 0.5, scalar_op(-1.0), 1.0);
        assert!(c05.clone().with_u0(one()).with_u1(one()).validate().is_err());
        let rl = ProblemSpec::new(ProblemKind::RiemannLiouville, 1.5, scalar_op(-1.0), 1.0);
        assert!(rl.clone().validate().is_err());
        assert!(rl.with_g0(one()).validate().is_ok());
        let ab = ProblemSpec::new(ProblemKind::Abstract, 0.7, scalar_op(-1.0), 1.0);
        assert!(ab.clone().validate().is_ok());
        assert!(ab.with_u0(one()).validate().is_err());
        assert!(ProblemSpec::new(ProblemKind::Abstract, 1.0, scalar_op(-1.0), 1.0).validate().is_err());
    }

    #[test]
    fn sector_hypothesis_is_checked() {
        let narrow = MatrixOperator::from_real(DMatrix::from_element(1, 1, -1.0), 0.0, 1.0).unwrap();
        let p = ProblemSpec::new(ProblemKind::Abstract, 0.8, narrow, 1.0);
        assert!(matches!(p.validate(), Err(Error::SectorViolation(_))));
    }

    #[test]
    fn json_document() {
        let doc = r#"{
            "alpha": 1.5, "kind": "caputo",
            "operator": {"dim": 1, "entries": [[-1.0]], "lambda0": 0.0, "phi": 3.0},
            "forcing": {"type": "polynomial", "coeffs": [[1.0], [[0.0, 2.0]]]},
            "u0": [0.0], "u1": [1.0], "t_end": 2.0, "beta_target": 0.3
        }"#;
        let p = ProblemSpec::from_json_str(doc, None).unwrap();
        assert_eq!(p.kind, ProblemKind::Caputo);
        let f = p.forcing.sample(1, 2.0, 8).unwrap();
        assert_eq!(f.values()[(0, 8)], C64::new(1.0, 4.0));
        assert_eq!(p.beta_target, Some(0.3));
    }

    #[test]
    fn power_forcing_carries_its_term() {
        let f = Forcing::Power { exponent: 0.3, coeff: one() };
        let p = f.sample(1, 1.0, 16).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert!((p.values()[(0, 16)].re - 1.0).abs() < 1e-15);
        assert_eq!(p.remainder()[(0, 5)], C64::new(0.0, 0.0));
    }
}
