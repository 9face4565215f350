//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk + β)`.
//!
//! Two independent routes:
//! * the power series, summed in `f64` when cancellation is harmless and in
//!   MPFR with enough guard bits otherwise;
//! * the Hankel-type integral `(1/2πi) ∫ e^μ μ^{α-β} / (μ^α - z) dμ` on a
//!   keyhole contour, plus residues `e^p p^{1-β} / α` of the poles `p^α = z`
//!   lying to the right of the contour.

use std::f64::consts::PI;

use nalgebra::Complex;
use rug::Float;
use serde::{Deserialize, Serialize};

use super::gamma::{ln_gamma, rgamma};
use crate::contour::{quadrature_window, ContourSpec, QuadConfig, SingularityHint};
use crate::error::{Error, Result};

pub const DEFAULT_TERM_CAP: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-14;
/// `|z|` above which [`mittag_leffler`] switches from the series to the contour.
pub const SWITCH_RADIUS: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_tol(alpha, beta, DEFAULT_TOL)
    }

    pub fn with_tol(alpha: f64, beta: f64, tol: f64) -> Result<Self> {
        let p = Self { alpha, beta, tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!(
                "Mittag-Leffler parameters need α > 0 and β > 0, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        if !(self.tol > 1e-15 && self.tol < 1e-2) {
            return Err(Error::Domain(format!("tolerance {} outside (1e-15, 1e-2)", self.tol)));
        }
        Ok(())
    }
}

/// Log-magnitudes of the series terms, and the number of terms needed.
struct TermPlan {
    log_mag: Vec<f64>,
    count: usize,
}

fn plan_terms(p: &MlParams, z: Complex<f64>, cap: usize) -> Result<TermPlan> {
    let lz = z.norm().ln();
    let lt = |k: usize| k as f64 * lz - ln_gamma(p.alpha * k as f64 + p.beta);
    let ltol = (0.25 * p.tol).ln();
    let mut log_mag = vec![lt(0)];
    let mut k = 0usize;
    loop {
        if k + 1 > cap {
            return Err(Error::SeriesNonConvergence { terms: cap });
        }
        let next = lt(k + 1);
        log_mag.push(next);
        let cur = log_mag[k];
        if next < cur {
            // log-concave tail: geometric bound with the current ratio
            let ratio = (next - cur).exp();
            let tail = cur - (1.0 - ratio).ln();
            if tail < ltol {
                break;
            }
        }
        k += 1;
    }
    // two-term guard
    let count = (k + 2).min(log_mag.len() + 1);
    while log_mag.len() < count {
        log_mag.push(lt(log_mag.len()));
    }
    Ok(TermPlan { log_mag, count })
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Series evaluation with the default term cap.
pub fn mittag_leffler_series(p: &MlParams, z: Complex<f64>) -> Result<Complex<f64>> {
    mittag_leffler_series_capped(p, z, DEFAULT_TERM_CAP)
}

pub fn mittag_leffler_series_capped(p: &MlParams, z: Complex<f64>, cap: usize) -> Result<Complex<f64>> {
    p.validate()?;
    if z == Complex::new(0.0, 0.0) {
        return Ok(Complex::new(rgamma(p.beta), 0.0));
    }
    let plan = plan_terms(p, z, cap)?;
    let log_abs_sum = log_sum_exp(&plan.log_mag[..plan.count]);
    // measured f64 error stays below (4 + K) ulps of the absolute term sum
    let f64_error = log_abs_sum + (f64::EPSILON * (4.0 + plan.count as f64)).ln();
    if f64_error <= (0.5 * p.tol).ln() {
        Ok(series_f64(p, z, plan.count))
    } else {
        let excess = (log_abs_sum - p.tol.ln()) / std::f64::consts::LN_2;
        let bits = 64.0 + excess.max(0.0) + (plan.count as f64).log2();
        series_mpfr(p, z, plan.count, bits.ceil() as u32)
    }
}

fn series_f64(p: &MlParams, z: Complex<f64>, count: usize) -> Complex<f64> {
    let mut sum = Complex::new(0.0, 0.0);
    let mut zpow = Complex::new(1.0f64, 0.0);
    let mut recurrence = true;
    let lnz = z.ln();
    for k in 0..count {
        let x = p.alpha * k as f64 + p.beta;
        if recurrence && x < 160.0 && zpow.norm().is_finite() {
            sum += zpow * rgamma(x);
            zpow *= z;
        } else {
            recurrence = false;
            sum += (lnz * k as f64 - ln_gamma(x)).exp();
        }
    }
    sum
}

fn series_mpfr(p: &MlParams, z: Complex<f64>, count: usize, prec: u32) -> Result<Complex<f64>> {
    let alpha = Float::with_val(prec, p.alpha);
    let mut zr = Float::with_val(prec, 1u32);
    let mut zi = Float::with_val(prec, 0u32);
    let mut sr = Float::with_val(prec, 0u32);
    let mut si = Float::with_val(prec, 0u32);
    let mut last_small = [false, false];
    for k in 0..count {
        let x = Float::with_val(prec, &alpha * k as u32) + p.beta;
        let g = x.gamma();
        let tr = Float::with_val(prec, &zr / &g);
        let ti = Float::with_val(prec, &zi / &g);
        let mag = tr.to_f64().hypot(ti.to_f64());
        sr += &tr;
        si += &ti;
        last_small = [last_small[1], mag < p.tol];
        let nr = Float::with_val(prec, &zr * z.re) - Float::with_val(prec, &zi * z.im);
        let ni = Float::with_val(prec, &zr * z.im) + Float::with_val(prec, &zi * z.re);
        zr = nr;
        zi = ni;
    }
    if count >= 2 && !(last_small[0] && last_small[1]) {
        return Err(Error::SeriesNonConvergence { terms: count });
    }
    Ok(Complex::new(sr.to_f64(), si.to_f64()))
}

/// Poles `p` with `p^α = z` on the principal branch.
fn poles(alpha: f64, z: Complex<f64>) -> Vec<Complex<f64>> {
    let rho = z.norm().powf(1.0 / alpha);
    let phi = z.arg();
    (-3i32..=3)
        .filter_map(|k| {
            let psi = (phi + 2.0 * PI * k as f64) / alpha;
            (psi.abs() < PI).then(|| Complex::from_polar(rho, psi))
        })
        .collect()
}

fn distance_to_contour(p: Complex<f64>, theta: f64, r: f64) -> f64 {
    let ray = |sign: f64| {
        let dir = Complex::from_polar(1.0, sign * theta);
        let rot = p * dir.conj();
        if rot.re >= r {
            rot.im.abs()
        } else {
            (p - dir * r).norm()
        }
    };
    let arc = if p.arg().abs() <= theta {
        (p.norm() - r).abs()
    } else {
        (p - Complex::from_polar(r, theta)).norm().min((p - Complex::from_polar(r, -theta)).norm())
    };
    ray(1.0).min(ray(-1.0)).min(arc)
}

/// Contour and pole geometry for the integral route.
fn pick_contour(poles: &[Complex<f64>]) -> (f64, f64, f64) {
    let thetas = [0.75, 0.7, 0.8, 0.65, 0.85, 0.6, 0.9];
    let radii = [1.0, 0.5, 2.0, 0.25, 4.0];
    let mut best = (0.75 * PI, 1.0, f64::NEG_INFINITY);
    for &r in &radii {
        for &tf in &thetas {
            let theta = tf * PI;
            let score = poles
                .iter()
                .map(|&p| distance_to_contour(p, theta, r) / p.norm().max(r))
                .fold(f64::INFINITY, f64::min);
            if score > best.2 + 1e-12 {
                best = (theta, r, score);
            }
        }
    }
    best
}

/// Contour-integral evaluation; requires `α ∈ (0, 2]`.
pub fn mittag_leffler_contour(p: &MlParams, z: Complex<f64>, cfg: &QuadConfig) -> Result<Complex<f64>> {
    p.validate()?;
    if p.alpha > 2.0 {
        return Err(Error::Domain(format!("contour route needs α ≤ 2, got {}", p.alpha)));
    }
    let ps = if z == Complex::new(0.0, 0.0) { Vec::new() } else { poles(p.alpha, z) };
    let (theta, r, score) = pick_contour(&ps);
    if score < 0.05 {
        return Err(Error::Domain(format!(
            "a pole of μ^α - z lies within {score:.3} (relative) of every candidate contour"
        )));
    }
    let spec = ContourSpec::keyhole(theta, r, Complex::new(0.0, 0.0))?;
    let hint = if ps.is_empty() {
        SingularityHint::branch_cut_only()
    } else {
        let far = ps.iter().map(|q| q.norm()).fold(0.0, f64::max);
        SingularityHint { angular_gap: score.min(1.0), radius: 2.0 * far }
    };
    let rule = quadrature_window(&spec, 1.0, 1.0, cfg, hint)?;
    let (a, b) = (p.alpha, p.beta);
    let mut value = rule.integrate_scalar(1.0, |mu| mu.powf(a - b) / (mu.powf(a) - z));
    for q in ps {
        if q.arg().abs() < theta && q.norm() > r {
            value += q.exp() * q.powf(1.0 - b) / a;
        }
    }
    Ok(value)
}

/// Dispatching evaluator: series near the origin, contour integral farther out.
pub fn mittag_leffler(p: &MlParams, z: Complex<f64>) -> Result<Complex<f64>> {
    p.validate()?;
    if p.alpha == 1.0 && p.beta == 1.0 {
        return Ok(z.exp());
    }
    if p.alpha >= 2.0 || z.norm() <= SWITCH_RADIUS {
        return mittag_leffler_series(p, z);
    }
    match mittag_leffler_contour(p, z, &QuadConfig::default()) {
        Err(Error::Domain(msg)) => {
            log::warn!("Mittag-Leffler contour route rejected ({msg}); using the series");
            mittag_leffler_series_capped(p, z, 10 * DEFAULT_TERM_CAP)
        }
        other => other,
    }
}

/// Real-argument convenience wrapper around [`mittag_leffler`].
pub fn mittag_leffler_real(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    mittag_leffler(&MlParams::new(alpha, beta)?, Complex::new(x, 0.0)).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma_real;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn exp_and_constant_term() {
        let p = MlParams::new(1.0, 1.0).unwrap();
        assert!((mittag_leffler_series(&p, c(1.0)).unwrap() - std::f64::consts::E).norm() < 1e-14);
        let q = MlParams::new(0.7, 0.7).unwrap();
        let v = mittag_leffler_series(&q, c(0.0)).unwrap();
        assert!((v.re - 1.0 / gamma_real(0.7).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn cosh_identity() {
        let p = MlParams::new(2.0, 1.0).unwrap();
        let v = mittag_leffler_series(&p, c(4.0)).unwrap();
        assert!((v.re - 2f64.cosh()).abs() < 1e-13);
        assert!((v.re - 3.762_195_691_083_631).abs() < 1e-13);
    }

    #[test]
    fn exp_of_large_negative_argument() {
        let p = MlParams::new(1.0, 1.0).unwrap();
        let v = mittag_leffler(&p, c(-50.0)).unwrap();
        assert!((v.re / (-50f64).exp() - 1.0).abs() < 1e-12);
        // the series alone also survives the cancellation
        let s = mittag_leffler_series(&p, c(-50.0)).unwrap();
        assert!((s.re - (-50f64).exp()).abs() < 1e-14);
        // and so does the contour route
        let k = mittag_leffler_contour(&p, c(-50.0), &QuadConfig::default()).unwrap();
        assert!((k.re - (-50f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn erfc_closed_form() {
        // E_{1/2,1}(-x) = e^{x²} erfc(x); at x = 1: e·erfc(1)
        let p = MlParams::new(0.5, 1.0).unwrap();
        let v = mittag_leffler_series(&p, c(-1.0)).unwrap();
        assert!((v.re - 0.427_583_576_155_807).abs() < 1e-14);
    }

    #[test]
    fn dispatch_matches_series_for_half_order() {
        let p = MlParams::new(0.5, 0.5).unwrap();
        let a = mittag_leffler(&p, c(-2.0)).unwrap();
        let b = mittag_leffler_series_capped(&p, c(-2.0), 100_000).unwrap();
        assert!((a - b).norm() <= 1e-8);
        let q = MlParams::new(1.5, 1.5).unwrap();
        let z = Complex::new(1.0, 1.0);
        let a = mittag_leffler_contour(&q, z, &QuadConfig::default()).unwrap();
        let b = mittag_leffler_series(&q, z).unwrap();
        assert!((a - b).norm() <= 1e-8);
    }

    #[test]
    fn shift_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = rng.gen_range(0.4..1.95);
            let b = rng.gen_range(0.2..2.5);
            let z = Complex::new(rng.gen_range(-6.0..6.0), rng.gen_range(-3.0..3.0));
            let p = MlParams::new(a, b).unwrap();
            let q = MlParams::new(a, a + b).unwrap();
            let lhs = mittag_leffler_series(&p, z).unwrap_or_else(|e| panic!("{e} a={a} b={b} z={z}"));
            let rhs = rgamma(b) + z * mittag_leffler_series(&q, z).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "a={a} b={b} z={z}");
        }
    }

    #[test]
    fn series_and_contour_agree_on_grid() {
        let cfg = QuadConfig::default();
        for a in [0.4, 0.7, 1.0, 1.3, 1.6, 1.9] {
            let p = MlParams::new(a, a).unwrap();
            for k in -10..=10 {
                let z = c(k as f64);
                let s = mittag_leffler_series(&p, z).unwrap();
                let q = mittag_leffler_contour(&p, z, &cfg).unwrap();
                assert!((s - q).norm() <= 1e-8 * s.norm().max(1.0), "α={a} z={k}: {s} vs {q}");
            }
        }
    }

    #[test]
    fn term_cap_is_reported() {
        let p = MlParams::new(0.1, 1.0).unwrap();
        assert!(matches!(
            mittag_leffler_series_capped(&p, c(-30.0), 50),
            Err(Error::SeriesNonConvergence { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.0, -1.0).is_err());
        assert!(MlParams::with_tol(1.0, 1.0, 1e-16).is_err());
        assert!(MlParams::with_tol(1.0, 1.0, 0.1).is_err());
    }
}
