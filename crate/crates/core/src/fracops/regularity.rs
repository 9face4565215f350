//! Hölder and Zygmund seminorm estimators on sampled paths.

use nalgebra::DMatrix;
use serde::Serialize;

use super::path::{inf_norm, SampledPath, C64};
use crate::error::{Error, Result};

/// Fitted exponents are clamped to `[0, HOLDER_CAP]`.
pub const HOLDER_CAP: f64 = 1.999;
/// Moduli below this are treated as identically zero.
pub const DEGENERATE_MODULUS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    /// `(h, ω(h))` with `ω(h) = max_t ‖f(t+h) - f(t)‖` on dyadic `h`.
    pub exponent_grid: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    /// Range of `h` entering the fit.
    pub fit_range: (f64, f64),
    /// Set when the modulus vanishes; the exponent is then reported as [`HOLDER_CAP`].
    pub degenerate: bool,
}

impl HolderReport {
    /// `max_h h^{-β} ω(h)` over the recorded grid.
    pub fn seminorm_at(&self, beta: f64) -> f64 {
        self.exponent_grid.iter().map(|&(h, w)| w / h.powf(beta)).fold(0.0, f64::max)
    }
}

fn first_derivative(v: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
    let n = v.ncols() - 1;
    let s = C64::new(1.0 / (2.0 * h), 0.0);
    let mut out = DMatrix::zeros(v.nrows(), n + 1);
    let (three, four) = (C64::new(3.0, 0.0), C64::new(4.0, 0.0));
    out.set_column(0, &((v.column(1) * four - v.column(0) * three - v.column(2)) * s));
    for k in 1..n {
        out.set_column(k, &((v.column(k + 1) - v.column(k - 1)) * s));
    }
    out.set_column(n, &((v.column(n) * three - v.column(n - 1) * four + v.column(n - 2)) * s));
    out
}

/// `max_t ‖v(t + lag·h) - v(t)‖_∞`.
fn modulus(v: &DMatrix<C64>, lag: usize) -> f64 {
    let n = v.ncols() - 1;
    (0..=n - lag).map(|k| inf_norm((v.column(k + lag) - v.column(k)).iter())).fold(0.0, f64::max)
}

/// `sup_h h^{-β} max_t ‖f^{(m)}(t+h) - f^{(m)}(t)‖` over all grid shifts.
pub fn holder_seminorm(f: &SampledPath, beta: f64, m: usize) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) || m > 1 {
        return Err(Error::Domain(format!("Hölder seminorm needs β ∈ (0,1] and m ∈ {{0,1}}, got ({beta}, {m})")));
    }
    let owned;
    let v = if m == 1 {
        owned = first_derivative(f.values(), f.step());
        &owned
    } else {
        f.values()
    };
    let n = f.intervals();
    Ok((1..=n).map(|lag| modulus(v, lag) / (lag as f64 * f.step()).powf(beta)).fold(0.0, f64::max))
}

/// Least-squares slope of `log ω(h)` against `log h` on dyadic `h ∈ [4 step, T/4]`.
pub fn estimate_holder_exponent(f: &SampledPath) -> HolderReport {
    let n = f.intervals();
    let h = f.step();
    let mut grid = Vec::new();
    let mut lag = 1usize;
    while lag <= n / 2 {
        grid.push((lag as f64 * h, modulus(f.values(), lag)));
        lag *= 2;
    }
    let lo = 4.0 * h * (1.0 - 1e-9);
    let hi = f.t_end() / 4.0 * (1.0 + 1e-9);
    let pts: Vec<(f64, f64)> = grid.iter().cloned().filter(|&(s, _)| s >= lo && s <= hi).collect();
    let fit_range = (
        pts.first().map_or(f64::NAN, |p| p.0),
        pts.last().map_or(f64::NAN, |p| p.0),
    );
    let degenerate = pts.len() < 2 || pts.iter().any(|&(_, w)| w < DEGENERATE_MODULUS);
    let fitted_exponent = if degenerate {
        HOLDER_CAP
    } else {
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        (sxy / sxx).clamp(0.0, HOLDER_CAP)
    };
    HolderReport { exponent_grid: grid, fitted_exponent, fit_range, degenerate }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZygmundReport {
    pub value: f64,
    /// The supremum sits at the finest shift and scales like `1/step`.
    pub unbounded: bool,
}

/// `sup_h h^{-1} max_t ‖f(t+h) - 2f(t) + f(t-h)‖`; with `zero_extension`, `f = 0` for `t < 0`.
pub fn zygmund_seminorm(f: &SampledPath, zero_extension: bool) -> ZygmundReport {
    let v = f.values();
    let n = f.intervals();
    let h = f.step();
    let mut best = 0.0f64;
    let mut best_lag = 1usize;
    for lag in 1..=n / 2 {
        let k_lo = if zero_extension { 0 } else { lag };
        let mut m = 0.0f64;
        for k in k_lo..=n - lag {
            let left = if k >= lag { v.column(k - lag).into_owned() } else { v.column(0) * C64::new(0.0, 0.0) };
            let d = v.column(k + lag) - v.column(k) * C64::new(2.0, 0.0) + left;
            m = m.max(inf_norm(d.iter()));
        }
        let val = m / (lag as f64 * h);
        if val > best {
            best = val;
            best_lag = lag;
        }
    }
    let scale = f.sup_norm();
    ZygmundReport { value: best, unbounded: best_lag == 1 && best > 0.1 * scale / h && scale > 0.0 }
}
