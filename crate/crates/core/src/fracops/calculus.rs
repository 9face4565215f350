//! Riemann–Liouville integral and derivatives, Caputo derivative, and the
//! resolvent `(λ - B^α)^{-1}` of the fractional derivative on sampled paths.

use nalgebra::{DMatrix, DVector};

use super::path::{PowerTerm, SampledPath, C64};
use super::weights::ConvWeights;
use crate::error::{Error, Result};
use crate::specfun::{gamma_real, mittag_leffler, rgamma, MlParams};

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("fractional order must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_derivative_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(Error::Domain(format!("derivative order must lie in (0,1) ∪ (1,2), got {alpha}")));
    }
    Ok(())
}

/// `Γ(p+1)/Γ(p+1+α)`, the factor that `B^{-α}` applies to `t^p`.
fn integral_factor(p: f64, alpha: f64) -> Result<f64> {
    if p <= -1.0 {
        return Err(Error::Domain(format!("t^{p} is not locally integrable")));
    }
    Ok(gamma_real(p + 1.0)? * rgamma(p + 1.0 + alpha))
}

fn map_terms(terms: &[PowerTerm], alpha: f64) -> Result<Vec<PowerTerm>> {
    terms
        .iter()
        .map(|t| Ok(PowerTerm::new(t.exponent + alpha, &t.coeff * C64::new(integral_factor(t.exponent, alpha)?, 0.0))))
        .collect()
}

fn subtract_column(m: &mut DMatrix<C64>, v: &DVector<C64>) {
    for mut col in m.column_iter_mut() {
        col -= v;
    }
}

/// Riemann–Liouville integral `B^{-α} f`.
///
/// The smooth part of `f` is integrated by product integration; attached
/// power terms map exactly, and the value at 0 of the smooth part is recorded
/// as a new `t^α` term of the result.
pub fn frac_integral(f: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_order(alpha)?;
    let r = f.remainder();
    let weights = ConvWeights::power(alpha, f.step(), f.intervals());
    let mut values = weights.apply(&r);
    let mapped = map_terms(f.terms(), alpha)?;
    values += f.samples_of(&mapped);
    let r0 = r.column(0).into_owned();
    let mut terms = mapped;
    terms.push(PowerTerm::new(alpha, r0 * C64::new(rgamma(alpha + 1.0), 0.0)));
    f.with_values(values)?.with_terms(terms)
}

/// `(m+1)`-th derivative of sampled `g`, second order at the ends.
fn finite_difference(g: &DMatrix<C64>, order: usize, h: f64) -> DMatrix<C64> {
    let d = g.nrows();
    let n = g.ncols() - 1;
    let src = g.as_slice();
    let mut out = DMatrix::zeros(d, n + 1);
    let dst = out.as_mut_slice();
    let mut stencil = |k: usize, taps: &[(usize, f64)], scale: f64| {
        for i in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for &(j, c) in taps {
                acc += src[j * d + i] * c;
            }
            dst[k * d + i] = acc * scale;
        }
    };
    match order {
        1 => {
            let s = 1.0 / (2.0 * h);
            stencil(0, &[(0, -3.0), (1, 4.0), (2, -1.0)], s);
            for k in 1..n {
                stencil(k, &[(k + 1, 1.0), (k - 1, -1.0)], s);
            }
            stencil(n, &[(n, 3.0), (n - 1, -4.0), (n - 2, 1.0)], s);
        }
        2 => {
            let s = 1.0 / (h * h);
            stencil(0, &[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)], s);
            for k in 1..n {
                stencil(k, &[(k + 1, 1.0), (k, -2.0), (k - 1, 1.0)], s);
            }
            stencil(n, &[(n, 2.0), (n - 1, -5.0), (n - 2, 4.0), (n - 3, -1.0)], s);
        }
        _ => unreachable!("only first and second differences are used"),
    }
    out
}

/// Relative size of grid-scale oscillation in the latter 90% of a path.
fn roughness(v: &DMatrix<C64>) -> f64 {
    let n = v.ncols() - 1;
    let k0 = (n / 10).max(1);
    let scale = (k0..=n).flat_map(|k| v.column(k).iter().map(|z| z.norm()).collect::<Vec<_>>()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for k in k0..n {
        let d = v.column(k + 1) - v.column(k) * C64::new(2.0, 0.0) + v.column(k - 1);
        worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    worst / scale
}

const ROUGHNESS_WARN: f64 = 0.25;

/// Riemann–Liouville derivative `D^{m+1} B^{-(m+1-α)} f`, `m = ⌊α⌋`.
pub fn rl_derivative(f: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_derivative_order(alpha)?;
    let m = alpha.floor() as usize;
    let lift = (m + 1) as f64 - alpha;
    let mut r = f.remainder();
    let r0 = r.column(0).into_owned();
    subtract_column(&mut r, &r0);

    let g = ConvWeights::power(lift, f.step(), f.intervals()).apply(&r);
    let mut values = finite_difference(&g, m + 1, f.step());
    if roughness(&values) > ROUGHNESS_WARN {
        log::warn!("fractional derivative of order {alpha} amplifies grid-scale noise; refine or smooth the data");
    }

    let mut terms = Vec::with_capacity(f.terms().len() + 1);
    for t in f.terms() {
        // D^α t^p = Γ(p+1)/Γ(p+1-α) t^{p-α}
        let factor = integral_factor(t.exponent, -alpha)?;
        terms.push(PowerTerm::new(t.exponent - alpha, &t.coeff * C64::new(factor, 0.0)));
    }
    terms.push(PowerTerm::new(-alpha, r0 * C64::new(rgamma(1.0 - alpha), 0.0)));
    terms.retain(|t| t.coeff.iter().any(|c| c.norm() > 0.0));
    values += f.samples_of(&terms);
    f.with_values(values)?.with_terms(terms)
}

/// `u(0)` and, for `α > 1`, `u'(0)` estimated from the samples.
pub fn initial_traces(u: &SampledPath, alpha: f64) -> (DVector<C64>, Option<DVector<C64>>) {
    let u0 = u.value(0);
    if alpha < 1.0 {
        return (u0, None);
    }
    let r = u.remainder();
    let h = u.step();
    let mut u1 = (r.column(1) * C64::new(4.0, 0.0) - r.column(0) * C64::new(3.0, 0.0) - r.column(2))
        * C64::new(1.0 / (2.0 * h), 0.0);
    for t in u.terms() {
        if t.exponent == 1.0 {
            u1 += &t.coeff;
        }
    }
    (u0, Some(u1))
}

/// Caputo derivative with traces estimated from the data.
pub fn caputo_derivative(u: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_derivative_order(alpha)?;
    let (u0, u1) = initial_traces(u, alpha);
    caputo_derivative_with_traces(u, alpha, &u0, u1.as_ref())
}

/// Caputo derivative `D^α (u - Σ_{k≤m} u_k t^k)` with prescribed traces.
pub fn caputo_derivative_with_traces(
    u: &SampledPath,
    alpha: f64,
    u0: &DVector<C64>,
    u1: Option<&DVector<C64>>,
) -> Result<SampledPath> {
    check_derivative_order(alpha)?;
    if u0.len() != u.dim() || u1.is_some_and(|v| v.len() != u.dim()) {
        return Err(Error::Shape("trace dimension differs from path dimension".into()));
    }
    if alpha > 1.0 && u1.is_none() {
        return Err(Error::InvalidProblem("Caputo derivative of order > 1 needs u'(0)".into()));
    }
    let mut values = u.values().clone();
    // traces already carried as power terms are removed there too
    let has = |p: f64| u.terms().iter().any(|t| t.exponent == p);
    let mut terms = u.terms().to_vec();
    if has(0.0) {
        terms.push(PowerTerm::new(0.0, -u0));
    }
    for k in 0..=u.intervals() {
        let t = u.time(k);
        let mut col = values.column_mut(k);
        col -= u0;
        if let (Some(v), true) = (u1, alpha > 1.0) {
            col.axpy(C64::new(-t, 0.0), v, C64::new(1.0, 0.0));
        }
    }
    if let (Some(v), true) = (u1, alpha > 1.0 && has(1.0)) {
        terms.push(PowerTerm::new(1.0, -v));
    }
    let shifted = u.with_values(values)?.with_terms(terms)?;
    rl_derivative(&shifted, alpha)
}

/// Kernel values are far more accurate than the product-integration error at this tolerance.
const KERNEL_TOL: f64 = 1e-12;

/// `(λ - B^α)^{-1} f = -∫₀ᵗ E_{α,α}(λ(t-s)^α)(t-s)^{α-1} f(s) ds`.
pub fn scalar_resolvent(lambda: C64, alpha: f64, f: &SampledPath) -> Result<SampledPath> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("resolvent kernel needs α ∈ (0,2), got {alpha}")));
    }
    if lambda == C64::new(0.0, 0.0) {
        return Ok(frac_integral(f, alpha)?.scale(C64::new(-1.0, 0.0)));
    }
    let n = f.intervals();
    let h = f.step();
    let p1 = MlParams::with_tol(alpha, alpha + 1.0, KERNEL_TOL)?;
    let p2 = MlParams::with_tol(alpha, alpha + 2.0, KERNEL_TOL)?;
    let mut k1 = vec![C64::new(0.0, 0.0); n + 1];
    let mut k2 = vec![C64::new(0.0, 0.0); n + 1];
    for m in 1..=n {
        let tau = m as f64 * h;
        let z = lambda * tau.powf(alpha);
        k1[m] = mittag_leffler(&p1, z)? * tau.powf(alpha);
        k2[m] = mittag_leffler(&p2, z)? * tau.powf(alpha + 1.0);
    }
    let r = f.remainder();
    let mut values = -ConvWeights::from_primitives(&k1, &k2, h).apply(&r);

    let r0 = r.column(0).into_owned();
    let mut terms = vec![PowerTerm::new(alpha, r0 * C64::new(-rgamma(alpha + 1.0), 0.0))];
    for t in f.terms() {
        let p = t.exponent;
        let g = gamma_real(p + 1.0)?;
        let params = MlParams::with_tol(alpha, alpha + p + 1.0, KERNEL_TOL)?;
        for k in 1..=n {
            let tk = f.time(k);
            let e = mittag_leffler(&params, lambda * tk.powf(alpha))?;
            let s = -e * g * tk.powf(alpha + p);
            let mut col = values.column_mut(k);
            col.axpy(s, &t.coeff, C64::new(1.0, 0.0));
        }
        terms.push(PowerTerm::new(p + alpha, &t.coeff * C64::new(-g * rgamma(p + alpha + 1.0), 0.0)));
    }
    f.with_values(values)?.with_terms(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::mittag_leffler_real;

    fn scalar(t_end: f64, n: usize, f: impl Fn(f64) -> f64) -> SampledPath {
        SampledPath::from_scalar_fn(t_end, n, f).unwrap()
    }

    fn max_err_from(p: &SampledPath, k0: usize, exact: impl Fn(f64) -> f64) -> f64 {
        (k0..=p.intervals()).map(|k| (p.values()[(0, k)].re - exact(p.time(k))).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn integral_of_constants_and_lines() {
        let one = scalar(1.0, 64, |_| 1.0);
        let i1 = frac_integral(&one, 1.0).unwrap();
        assert!(max_err_from(&i1, 0, |t| t) < 1e-14);
        let ih = frac_integral(&one, 0.5).unwrap();
        assert!(max_err_from(&ih, 0, |t| 1.128_379_167_095_512_6 * t.sqrt()) < 1e-13);
        let lin = scalar(1.0, 64, |t| t);
        let il = frac_integral(&lin, 0.5).unwrap();
        assert!(max_err_from(&il, 0, |t| 0.752_252_778_063_675 * t.powf(1.5)) < 1e-13);
    }

    #[test]
    fn power_rule_first_order() {
        let f = scalar(1.0, 2048, |t| t);
        let d = rl_derivative(&f, 0.5).unwrap();
        let c = 1.0 / gamma_real(1.5).unwrap();
        let k0 = 205;
        let rel = (k0..=2048)
            .map(|k| {
                let t = d.time(k);
                (d.values()[(0, k)].re - c * t.sqrt()).abs() / (c * t.sqrt())
            })
            .fold(0.0, f64::max);
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn derivative_inverts_integral() {
        let f = scalar(1.0, 1024, |t| (2.0 * t).cos() + t);
        for alpha in [0.4, 1.6] {
            let back = rl_derivative(&frac_integral(&f, alpha).unwrap(), alpha).unwrap();
            let err = max_err_from(&back, 10, |t| (2.0 * t).cos() + t);
            assert!(err < 1e-4, "α = {alpha}: {err}");
        }
    }

    #[test]
    fn kernel_of_rl_derivative() {
        // D^{1.5} t^{0.5} = 0 for t > 0
        let f = scalar(1.0, 1024, |t| t.sqrt());
        let d = rl_derivative(&f, 1.5).unwrap();
        assert!(d.sup_norm_from(102) < 1e-3, "{}", d.sup_norm_from(102));
    }

    #[test]
    fn caputo_kills_polynomials() {
        let c = scalar(1.0, 256, |_| 3.0);
        assert!(caputo_derivative(&c, 0.6).unwrap().sup_norm() < 1e-12);
        let l = scalar(1.0, 256, |t| 1.0 - 2.0 * t);
        assert!(caputo_derivative(&l, 1.4).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn caputo_of_mittag_leffler_relaxation() {
        let a = 0.6;
        let u = scalar(1.0, 2048, |t| mittag_leffler_real(a, 1.0, -t.powf(a)).unwrap());
        let d = caputo_derivative(&u, a).unwrap();
        let err = (205..=2048).map(|k| (d.values()[(0, k)].re + u.values()[(0, k)].re).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn resolvent_special_cases() {
        let f = scalar(1.0, 256, |t| 1.0 + t * t);
        let a = 0.7;
        let r0 = scalar_resolvent(C64::new(0.0, 0.0), a, &f).unwrap();
        let i = frac_integral(&f, a).unwrap();
        assert!((r0.values() + i.values()).iter().all(|z| z.norm() < 1e-14));
        // α = 1: -∫ e^{λ(t-s)} f(s) ds with f ≡ 1 → (1 - e^{λt})/λ
        let one = scalar(1.0, 256, |_| 1.0);
        let lam = -2.0;
        let r1 = scalar_resolvent(C64::new(lam, 0.0), 1.0, &one).unwrap();
        assert!(max_err_from(&r1, 0, |t| (1.0 - (lam * t).exp()) / lam) < 1e-12);
    }

    #[test]
    fn resolvent_residual() {
        // (λ - B^α) v = f with v = (λ - B^α)^{-1} f
        let a = 0.6;
        let lam = C64::new(-1.5, 0.5);
        let f = scalar(1.0, 2048, |t| (3.0 * t).sin() + 1.0);
        let v = scalar_resolvent(lam, a, &f).unwrap();
        let d = rl_derivative(&v, a).unwrap();
        let k0 = 41;
        let res = (k0..=2048)
            .map(|k| (v.values()[(0, k)] * lam - d.values()[(0, k)] - f.values()[(0, k)]).norm())
            .fold(0.0, f64::max);
        assert!(res < 1e-3, "{res}");
    }
}
