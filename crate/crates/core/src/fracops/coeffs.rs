//! Leading coefficients of `u - v ≈ Σ_{k≤N} f_k t^{k+α}` at `t = 0`.

use nalgebra::DVector;

use super::path::{inf_norm, SampledPath, C64};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CoeffEstimate {
    /// `f_0, ..., f_N` at the selected scale.
    pub coeffs: Vec<DVector<C64>>,
    /// Sampling scale `t` the estimate comes from.
    pub t: f64,
    /// `(t, f_0)` for every dyadic scale tried, largest `t` first.
    pub history: Vec<(f64, Vec<DVector<C64>>)>,
    /// Successive estimates never settled down.
    pub ill_conditioned: bool,
}

fn solve_small(w1: &DVector<C64>, w2: Option<&DVector<C64>>, t: f64, alpha: f64) -> Vec<DVector<C64>> {
    let ta = t.powf(alpha);
    match w2 {
        None => vec![w1 / C64::new(ta, 0.0)],
        Some(w2) => {
            let p = 2f64.powf(alpha);
            let f1 = (w2 - w1 * C64::new(p, 0.0)) / C64::new(p * t * ta, 0.0);
            let f0 = (w1 * C64::new(2.0, 0.0) - w2 / C64::new(p, 0.0)) / C64::new(ta, 0.0);
            vec![f0, f1]
        }
    }
}

/// Solve `Σ_k (jt)^{k+α} f_k = u(jt) - v(jt)`, `j = 1..=N+1`, on dyadic `t`
/// and keep the last estimate before successive changes start to grow.
pub fn extract_initial_coeffs(u: &SampledPath, v: Option<&SampledPath>, alpha: f64, order: usize) -> Result<CoeffEstimate> {
    if order > 1 {
        return Err(Error::Domain(format!("coefficient extraction supports N ∈ {{0, 1}}, got {order}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("α must be positive, got {alpha}")));
    }
    let w = match v {
        Some(v) => u.sub(v)?,
        None => u.clone(),
    };
    let n = w.intervals();
    // dyadic lags, largest first, with (order+1)·lag ≤ n
    let mut lags = Vec::new();
    let mut lag = 1usize;
    while (order + 1) * lag <= n / 2 {
        lags.push(lag);
        lag *= 2;
    }
    lags.reverse();
    if lags.is_empty() {
        return Err(Error::Shape("path too short for coefficient extraction".into()));
    }
    let history: Vec<(f64, Vec<DVector<C64>>)> = lags
        .iter()
        .map(|&l| {
            let t = l as f64 * w.step();
            let w1 = w.value(l);
            let w2 = (order == 1).then(|| w.value(2 * l));
            (t, solve_small(&w1, w2.as_ref(), t, alpha))
        })
        .collect();
    let change = |i: usize| -> f64 {
        history[i]
            .1
            .iter()
            .zip(&history[i - 1].1)
            .map(|(a, b)| inf_norm((a - b).iter()))
            .fold(0.0, f64::max)
    };
    let mut pick = 0;
    let mut settled = history.len() == 1;
    let mut prev = f64::INFINITY;
    for i in 1..history.len() {
        let c = change(i);
        if c > prev {
            break;
        }
        if c < prev {
            settled = true;
        }
        prev = c;
        pick = i;
    }
    Ok(CoeffEstimate {
        coeffs: history[pick].1.clone(),
        t: history[pick].0,
        ill_conditioned: !settled,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_power() {
        let a = 0.6;
        let u = SampledPath::from_scalar_fn(1.0, 256, |t| 2.5 * t.powf(a)).unwrap();
        let e = extract_initial_coeffs(&u, None, a, 0).unwrap();
        assert!((e.coeffs[0][0].re - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_powers() {
        let a = 1.3;
        let u = SampledPath::from_scalar_fn(1.0, 256, |t| -0.7 * t.powf(a) + 4.0 * t.powf(1.0 + a)).unwrap();
        let e = extract_initial_coeffs(&u, None, a, 1).unwrap();
        assert!((e.coeffs[0][0].re + 0.7).abs() < 1e-8);
        assert!((e.coeffs[1][0].re - 4.0).abs() < 1e-8);
    }

    #[test]
    fn perturbation_decays_with_scale() {
        let (a, b) = (0.5, 0.4);
        let u = SampledPath::from_scalar_fn(1.0, 4096, |t| t.powf(a) + t.powf(a + b)).unwrap();
        let e = extract_initial_coeffs(&u, None, a, 0).unwrap();
        let errs: Vec<f64> = e.history.iter().map(|(_, c)| (c[0][0].re - 1.0).abs()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0]);
            // halving t scales the error by 2^{-β}
            assert!((w[1] / w[0] - 0.5f64.powf(b)).abs() < 1e-9);
        }
    }
}
