//! Keyhole contours and quadrature of Laplace-type inversion integrals.
//!
//! A keyhole contour is the union of the arc `{|μ - c| = r, |arg(μ - c)| <= θ}`
//! and the two rays `{|arg(μ - c)| = θ, |μ - c| >= r}`, traversed from
//! `∞e^{-iθ}` to `∞e^{iθ}`. It is parameterized by arclength `s`, with
//! `μ(0) = c + r` and the arc covering `|s| <= rθ`.
//!
//! Integrals `(1/2πi) ∫ e^{μt} F(μ) dμ` are discretized with composite
//! Gauss–Legendre panels in `s`. Panel lengths follow a local scale that
//! resolves both the geometry of `F` (singularities sit at angular distance
//! `gap` from the rays) and the oscillation of `e^{μt}` over a window of
//! times `[t_min, t_max]`, so one rule can serve every time in the window.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre points per panel. Odd, so the arc apex is a node.
pub const PANEL_ORDER: usize = 17;

/// Oscillation budget: `e^{μt}` may change its exponent by this much per local unit.
const OSC_BUDGET: f64 = 8.0;

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).unwrap());
        let mut pairs = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize exactly
        let n = pairs.len();
        for i in 0..n / 2 {
            let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
            let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
            pairs[i] = (-x, w);
            pairs[n - 1 - i] = (x, w);
        }
        pairs[n / 2].0 = 0.0;
        pairs
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    theta: f64,
    radius: f64,
    shift: Complex<f64>,
}

impl ContourSpec {
    pub fn keyhole(theta: f64, radius: f64, shift: Complex<f64>) -> Result<Self> {
        if !(theta > PI / 2.0 && theta < PI) {
            return Err(Error::Domain(format!(
                "keyhole angle θ = {theta} must lie in (π/2, π) so that Re μ → -∞ along the rays"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("keyhole radius must be positive, got {radius}")));
        }
        Ok(Self { theta, radius, shift })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn shift(&self) -> Complex<f64> {
        self.shift
    }

    pub fn arc_half_length(&self) -> f64 {
        self.radius * self.theta
    }

    /// `μ(s)`.
    pub fn point(&self, s: f64) -> Complex<f64> {
        let s0 = self.arc_half_length();
        if s.abs() <= s0 {
            self.shift + Complex::from_polar(self.radius, s / self.radius)
        } else {
            let rho = self.radius + (s.abs() - s0);
            self.shift + Complex::from_polar(rho, self.theta.copysign(s))
        }
    }

    /// `dμ/ds`.
    pub fn tangent(&self, s: f64) -> Complex<f64> {
        let s0 = self.arc_half_length();
        if s.abs() <= s0 {
            Complex::<f64>::i() * Complex::from_polar(1.0, s / self.radius)
        } else if s > 0.0 {
            Complex::from_polar(1.0, self.theta)
        } else {
            -Complex::from_polar(1.0, -self.theta)
        }
    }

    /// Same contour with the arc radius raised to at least `min_radius`.
    pub fn with_min_radius(&self, min_radius: f64) -> Self {
        Self { radius: self.radius.max(min_radius), ..*self }
    }

    /// Distance `ρ = |μ - c|` at which the rays are cut for a tail tolerance
    /// `tail_tol` and smallest time `t_min`.
    pub fn truncation_radius(&self, t_min: f64, tail_tol: f64) -> f64 {
        let c = -self.theta.cos();
        ((-tail_tol.ln()) / t_min - self.radius).max(0.0) / c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    /// Gauss–Legendre nodes per unit of local scale.
    pub nodes_per_unit: usize,
    /// Rays stop where `|e^{μt}|` falls below `tail_tol · |e^{μ(0)t}|`.
    pub tail_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { nodes_per_unit: 12, tail_tol: 1e-15, max_nodes: 1_000_000 }
    }
}

/// Where the integrand's singularities lie relative to the contour.
///
/// Within `|μ - c| <= radius` the closest singularity may be only
/// `angular_gap` radians from a ray; beyond it only the branch cut on the
/// negative axis matters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularityHint {
    pub angular_gap: f64,
    pub radius: f64,
}

impl SingularityHint {
    pub fn branch_cut_only() -> Self {
        Self { angular_gap: 1.0, radius: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadNode {
    pub mu: Complex<f64>,
    /// Includes `dμ/ds` and the `1/(2πi)` factor.
    pub weight: Complex<f64>,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<QuadNode>,
    truncation_param: f64,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest retained arclength parameter.
    pub fn truncation_param(&self) -> f64 {
        self.truncation_param
    }

    /// `Σ w e^{μt} F(μ)`.
    pub fn integrate<F>(&self, t: f64, mut f: F) -> DVector<Complex<f64>>
    where
        F: FnMut(Complex<f64>) -> DVector<Complex<f64>>,
    {
        let mut acc: Option<DVector<Complex<f64>>> = None;
        for node in &self.nodes {
            let v = f(node.mu) * (node.weight * (node.mu * t).exp());
            match acc.as_mut() {
                Some(a) => *a += v,
                None => acc = Some(v),
            }
        }
        acc.unwrap_or_else(|| DVector::zeros(0))
    }

    pub fn integrate_scalar<F>(&self, t: f64, mut f: F) -> Complex<f64>
    where
        F: FnMut(Complex<f64>) -> Complex<f64>,
    {
        self.nodes
            .iter()
            .map(|n| n.weight * (n.mu * t).exp() * f(n.mu))
            .fold(Complex::new(0.0, 0.0), |a, b| a + b)
    }
}

struct ScaleModel {
    apex_re: f64,
    shift: Complex<f64>,
    t_min: f64,
    t_max: f64,
    near_gap: f64,
    far_gap: f64,
    near_radius: f64,
    density: f64,
}

impl ScaleModel {
    /// Panel length at `μ`.
    fn panel_length(&self, mu: Complex<f64>) -> f64 {
        let rho = (mu - self.shift).norm();
        let gap = if rho <= self.near_radius { self.near_gap } else { self.far_gap };
        let geometric = gap * rho;
        let decay = (self.apex_re - mu.re).max(0.0);
        let t_eff = if decay > 0.0 {
            (2.0 * PANEL_ORDER as f64 / decay).clamp(self.t_min, self.t_max)
        } else {
            self.t_max
        };
        geometric.min(OSC_BUDGET / t_eff) * self.density
    }
}

/// Rule for a single time `t`.
pub fn quadrature(spec: &ContourSpec, t: f64, cfg: &QuadConfig) -> Result<QuadratureRule> {
    quadrature_window(spec, t, t, cfg, SingularityHint::branch_cut_only())
}

/// Rule valid for every `t` in `[t_min, t_max]`.
pub fn quadrature_window(
    spec: &ContourSpec,
    t_min: f64,
    t_max: f64,
    cfg: &QuadConfig,
    hint: SingularityHint,
) -> Result<QuadratureRule> {
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(Error::Domain(format!("quadrature needs 0 < t_min <= t_max, got [{t_min}, {t_max}]")));
    }
    if cfg.nodes_per_unit == 0 || !(cfg.tail_tol > 0.0 && cfg.tail_tol < 1.0) {
        return Err(Error::Domain("quadrature config needs nodes_per_unit > 0 and tail_tol in (0, 1)".into()));
    }
    let far_gap = (PI - spec.theta).min(1.0);
    let model = ScaleModel {
        apex_re: spec.point(0.0).re,
        shift: spec.shift,
        t_min,
        t_max,
        near_gap: hint.angular_gap.clamp(1e-3, far_gap),
        far_gap,
        near_radius: hint.radius,
        density: PANEL_ORDER as f64 / cfg.nodes_per_unit as f64,
    };

    let s0 = spec.arc_half_length();
    let rho_max = spec.truncation_radius(t_min, cfg.tail_tol).max(spec.radius);
    let s_max = s0 + (rho_max - spec.radius);

    // arc: uniform panels, odd count, finest local scale on the arc
    let arc_len = (0..=16)
        .map(|k| model.panel_length(spec.point(s0 * k as f64 / 16.0)))
        .fold(f64::INFINITY, f64::min);
    let mut n_arc = (2.0 * s0 / arc_len).ceil().max(1.0) as usize;
    if n_arc % 2 == 0 {
        n_arc += 1;
    }
    let arc_panel = 2.0 * s0 / n_arc as f64;

    // panels on s >= 0: half of the middle arc panel first, then the rest
    let mut panels: Vec<(f64, f64)> = Vec::new();
    for k in 0..n_arc / 2 {
        let a = arc_panel * (0.5 + k as f64);
        panels.push((a, a + arc_panel));
    }
    let mut s = s0;
    while s < s_max {
        let len = model.panel_length(spec.point(s)).max(1e-12 * s.max(1.0));
        let mut end = s + len;
        if end > s_max || s_max - end < 0.25 * len {
            end = s_max;
        }
        panels.push((s, end));
        s = end;
        if (2 * panels.len() + 1) * PANEL_ORDER > cfg.max_nodes {
            let estimate = estimate_total(&model, spec, s, s_max, panels.len());
            return Err(Error::QuadratureTooLarge { needed: estimate, limit: cfg.max_nodes });
        }
    }

    let rule = legendre_rule();
    let two_pi_i = Complex::new(0.0, 2.0 * PI);
    let make = |s: f64, w: f64| QuadNode { mu: spec.point(s), weight: spec.tangent(s) * w / two_pi_i };

    // (s, w) pairs on s > 0, plus the apex
    let mut upper: Vec<(f64, f64)> = Vec::with_capacity(panels.len() * PANEL_ORDER);
    let half = 0.5 * arc_panel;
    let mut apex_weight = 0.0;
    for &(x, w) in rule {
        if x > 0.0 {
            upper.push((half * x, w * half));
        } else if x == 0.0 {
            apex_weight = w * half;
        }
    }
    for &(a, b) in &panels {
        let mid = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        for &(x, w) in rule {
            upper.push((mid + hl * x, w * hl));
        }
    }

    let symmetric = spec.shift.im == 0.0;
    let upper_nodes: Vec<QuadNode> = upper.iter().map(|&(s, w)| make(s, w)).collect();
    let mut nodes = Vec::with_capacity(2 * upper.len() + 1);
    for (k, &(s, w)) in upper.iter().enumerate().rev() {
        if symmetric {
            let n = upper_nodes[k];
            nodes.push(QuadNode { mu: n.mu.conj(), weight: n.weight.conj() });
        } else {
            nodes.push(make(-s, w));
        }
    }
    nodes.push(make(0.0, apex_weight));
    nodes.extend(upper_nodes);
    Ok(QuadratureRule { nodes, truncation_param: s_max })
}

fn estimate_total(model: &ScaleModel, spec: &ContourSpec, mut s: f64, s_max: f64, done: usize) -> usize {
    let mut count = done;
    while s < s_max && count < 100_000_000 {
        s += model.panel_length(spec.point(s)).max(1e-12);
        count += 1;
    }
    (2 * count + 1) * PANEL_ORDER
}

/// `(1/2πi) ∫ e^{μt} F(μ) dμ` on `spec`, with the arc radius raised to `1/t`
/// when `t` is small.
pub fn laplace_inversion<F>(f: F, spec: &ContourSpec, t: f64, cfg: &QuadConfig) -> Result<DVector<Complex<f64>>>
where
    F: FnMut(Complex<f64>) -> DVector<Complex<f64>>,
{
    if !(t > 0.0) {
        return Err(Error::Domain(format!("laplace inversion needs t > 0, got {t}")));
    }
    let scaled = spec.with_min_radius(1.0 / t);
    let rule = quadrature(&scaled, t, cfg)?;
    Ok(rule.integrate(t, f))
}

/// Scalar form of [`laplace_inversion`].
pub fn laplace_inversion_scalar<F>(f: F, spec: &ContourSpec, t: f64, cfg: &QuadConfig) -> Result<Complex<f64>>
where
    F: FnMut(Complex<f64>) -> Complex<f64>,
{
    if !(t > 0.0) {
        return Err(Error::Domain(format!("laplace inversion needs t > 0, got {t}")));
    }
    let scaled = spec.with_min_radius(1.0 / t);
    let rule = quadrature(&scaled, t, cfg)?;
    Ok(rule.integrate_scalar(t, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma_real;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn spec() -> ContourSpec {
        ContourSpec::keyhole(0.75 * PI, 1.0, c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(ContourSpec::keyhole(PI / 2.0, 1.0, c(0.0, 0.0)).is_err());
        assert!(ContourSpec::keyhole(0.4 * PI, 1.0, c(0.0, 0.0)).is_err());
        assert!(ContourSpec::keyhole(0.75 * PI, 0.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn apex_and_conjugate_symmetry() {
        let k = spec();
        assert!((k.point(0.0) - c(1.0, 0.0)).norm() < 1e-15);
        for s in [0.3, 1.0, 2.0, 2.356, 5.0, 40.0] {
            assert!((k.point(s) - k.point(-s).conj()).norm() < 1e-13, "s = {s}");
        }
        // continuity at the arc/ray joins
        let s0 = k.arc_half_length();
        assert!((k.point(s0 - 1e-12) - k.point(s0 + 1e-12)).norm() < 1e-10);
    }

    #[test]
    fn shifted_nodes_stay_outside_disc() {
        let k = ContourSpec::keyhole(0.6 * PI, 2.0, c(1.0, 0.0)).unwrap();
        let rule = quadrature(&k, 1.0, &QuadConfig::default()).unwrap();
        for n in rule.nodes() {
            assert!((n.mu - c(1.0, 0.0)).norm() >= 2.0 - 1e-12);
        }
    }

    #[test]
    fn truncation_point_definition() {
        let k = spec();
        let cfg = QuadConfig { tail_tol: 1e-16, ..QuadConfig::default() };
        let rule = quadrature(&k, 1.0, &cfg).unwrap();
        let mu = k.point(rule.truncation_param());
        assert!(mu.re <= (1e-16f64).ln() + k.radius() + 1e-9);
    }

    #[test]
    fn node_set_is_odd_and_conjugate_symmetric() {
        let rule = quadrature(&spec(), 1.0, &QuadConfig::default()).unwrap();
        let n = rule.len();
        assert!(n >= 9 && n % 2 == 1);
        for i in 0..n {
            let a = rule.nodes()[i];
            let b = rule.nodes()[n - 1 - i];
            assert!((a.mu - b.mu.conj()).norm() <= 1e-14 * a.mu.norm().max(1.0));
            assert!((a.weight - b.weight.conj()).norm() <= 1e-14 * a.weight.norm().max(1e-300));
        }
    }

    #[test]
    fn heaviside_inversion() {
        let v = laplace_inversion_scalar(|l| 1.0 / l, &spec(), 1.0, &QuadConfig::default()).unwrap();
        assert!((v - 1.0).norm() < 1e-12, "{v}");
    }

    #[test]
    fn doubling_density_changes_little() {
        let base = QuadConfig::default();
        let fine = QuadConfig { nodes_per_unit: 2 * base.nodes_per_unit, ..base.clone() };
        let a = laplace_inversion_scalar(|l| 1.0 / l, &spec(), 1.0, &base).unwrap();
        let b = laplace_inversion_scalar(|l| 1.0 / l, &spec(), 1.0, &fine).unwrap();
        assert!((a - b).norm() <= 1e-10);
    }

    #[test]
    fn power_rule_inversion() {
        // L[t^δ] = Γ(δ+1) λ^{-δ-1}
        let delta: f64 = 0.7;
        let g = gamma_real(delta + 1.0).unwrap();
        let v = laplace_inversion_scalar(|l| g * l.powf(-delta - 1.0), &spec(), 0.5, &QuadConfig::default()).unwrap();
        assert!((v.re - 0.5f64.powf(0.7)).abs() < 1e-10);
        assert!(v.im.abs() < 1e-12);
        assert!((0.5f64.powf(0.7) - 0.615_572_206_672_458_2).abs() < 1e-15);
    }

    #[test]
    fn contour_independence() {
        let f = |l: Complex<f64>| 1.0 / (l * l + 1.0);
        let a = ContourSpec::keyhole(0.7 * PI, 2.0, c(0.0, 0.0)).unwrap();
        let b = ContourSpec::keyhole(0.85 * PI, 3.5, c(0.0, 0.0)).unwrap();
        let cfg = QuadConfig::default();
        for t in [0.3, 1.0, 4.0] {
            let va = quadrature(&a, t, &cfg).unwrap().integrate_scalar(t, f);
            let vb = quadrature(&b, t, &cfg).unwrap().integrate_scalar(t, f);
            assert!((va - vb).norm() <= 1e-8, "t = {t}");
            assert!((va.re - t.sin()).abs() <= 1e-10);
        }
    }

    #[test]
    fn window_rule_covers_every_time() {
        let k = spec();
        let cfg = QuadConfig::default();
        let rule = quadrature_window(&k, 1e-3, 1.0, &cfg, SingularityHint::branch_cut_only()).unwrap();
        for t in [1e-3, 3e-3, 0.02, 0.1, 0.5, 1.0] {
            let v = rule.integrate_scalar(t, |l| l.powf(-1.5));
            let exact = t.sqrt() / gamma_real(1.5).unwrap();
            assert!((v - exact).norm() <= 1e-10 * exact.max(1.0), "t = {t}: {v} vs {exact}");
        }
    }

    #[test]
    fn refinement_decreases_change() {
        let k = spec();
        let f = |l: Complex<f64>| 1.0 / (l.powf(0.6) + 2.0);
        let mut prev: Option<Complex<f64>> = None;
        let mut changes = Vec::new();
        for npu in [2, 4, 8] {
            let cfg = QuadConfig { nodes_per_unit: npu, ..QuadConfig::default() };
            let v = quadrature(&k, 1.0, &cfg).unwrap().integrate_scalar(1.0, f);
            if let Some(p) = prev {
                changes.push((v - p).norm());
            }
            prev = Some(v);
        }
        assert!(changes[1] <= changes[0], "{changes:?}");
    }

    #[test]
    fn too_many_nodes_is_reported() {
        let cfg = QuadConfig { max_nodes: 200, ..QuadConfig::default() };
        let err = quadrature_window(&spec(), 1e-6, 10.0, &cfg, SingularityHint::branch_cut_only());
        assert!(matches!(err, Err(Error::QuadratureTooLarge { .. })));
    }
}
