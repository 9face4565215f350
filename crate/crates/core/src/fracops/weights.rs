//! Product-integration weights for `∫₀^{t_n} k(t_n - s) f(s) ds` with `f`
//! replaced by its piecewise-linear interpolant on a uniform grid.
//!
//! With primitives `K1' = k`, `K2' = K1` (both vanishing at 0) and cell
//! `τ ∈ [(m-1)h, mh]`, the cell contributes `a_m f_{n-m} + b_m f_{n-m+1}` where
//! `M0 = K1(mh) - K1((m-1)h)`, `M1 = K2(mh) - K2((m-1)h) - h K1((m-1)h)`,
//! `a_m = M0 - M1/h`, `b_m = M1/h`.

use nalgebra::DMatrix;

use super::path::C64;
use crate::specfun::rgamma;

#[derive(Clone, Debug)]
pub struct ConvWeights {
    /// Weight of `f_0` in output `n` (index `n`; entry 0 unused).
    first: Vec<C64>,
    /// Weight of `f_j`, `j >= 1`, in output `n`, indexed by `n - j`.
    lag: Vec<C64>,
}

impl ConvWeights {
    fn from_cells(a: Vec<C64>, b: Vec<C64>) -> Self {
        let n = a.len() - 1;
        let mut lag = vec![C64::new(0.0, 0.0); n];
        for (q, w) in lag.iter_mut().enumerate() {
            *w = b[q + 1] + if q >= 1 { a[q] } else { C64::new(0.0, 0.0) };
        }
        Self { first: a, lag }
    }

    /// Weights from primitive samples `k1[m] = K1(mh)`, `k2[m] = K2(mh)`, `m = 0..=N`.
    pub fn from_primitives(k1: &[C64], k2: &[C64], h: f64) -> Self {
        let n = k1.len() - 1;
        let mut a = vec![C64::new(0.0, 0.0); n + 1];
        let mut b = vec![C64::new(0.0, 0.0); n + 1];
        for m in 1..=n {
            let m0 = k1[m] - k1[m - 1];
            let m1 = k2[m] - k2[m - 1] - k1[m - 1] * h;
            a[m] = m0 - m1 / h;
            b[m] = m1 / h;
        }
        Self::from_cells(a, b)
    }

    /// Weights for the Abel kernel `τ^{α-1}/Γ(α)`, computed without cancellation.
    pub fn power(alpha: f64, h: f64, n: usize) -> Self {
        let s0 = h.powf(alpha) * rgamma(alpha + 1.0);
        let s1 = h.powf(alpha + 1.0) * rgamma(alpha + 2.0);
        let mut a = vec![C64::new(0.0, 0.0); n + 1];
        let mut b = vec![C64::new(0.0, 0.0); n + 1];
        for m in 1..=n {
            let mf = m as f64;
            let x = 1.0 / mf;
            // m^α - (m-1)^α
            let d0 = -mf.powf(alpha) * (alpha * (-x).ln_1p()).exp_m1();
            // m^{α+1} - (m-1)^{α+1} - (α+1)(m-1)^α
            let d1 = -mf.powf(alpha + 1.0) * (alpha * (-x).ln_1p() + (alpha * x).ln_1p()).exp_m1();
            let m0 = s0 * d0;
            let m1 = s1 * d1;
            a[m] = C64::new(m0 - m1 / h, 0.0);
            b[m] = C64::new(m1 / h, 0.0);
        }
        Self::from_cells(a, b)
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// Convolve every row of `f` (columns are times). Output column 0 is zero.
    pub fn apply(&self, f: &DMatrix<C64>) -> DMatrix<C64> {
        let d = f.nrows();
        let n = f.ncols() - 1;
        assert!(n < self.first.len(), "weights shorter than the path");
        let src = f.as_slice();
        let mut out = DMatrix::zeros(d, n + 1);
        let dst = out.as_mut_slice();
        for k in 1..=n {
            let o = &mut dst[k * d..(k + 1) * d];
            let w0 = self.first[k];
            for i in 0..d {
                o[i] = w0 * src[i];
            }
            for j in 1..=k {
                let w = self.lag[k - j];
                let col = &src[j * d..(j + 1) * d];
                for i in 0..d {
                    o[i] += w * col[i];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma_real;

    #[test]
    fn power_weights_match_generic_primitives() {
        let alpha: f64 = 0.6;
        let h = 0.01;
        let n = 64;
        let k1: Vec<C64> = (0..=n)
            .map(|m| C64::new((m as f64 * h).powf(alpha) / gamma_real(alpha + 1.0).unwrap(), 0.0))
            .collect();
        let k2: Vec<C64> = (0..=n)
            .map(|m| C64::new((m as f64 * h).powf(alpha + 1.0) / gamma_real(alpha + 2.0).unwrap(), 0.0))
            .collect();
        let g = ConvWeights::from_primitives(&k1, &k2, h);
        let p = ConvWeights::power(alpha, h, n);
        for q in 0..n {
            assert!((g.lag[q] - p.lag[q]).norm() < 1e-12, "lag {q}");
        }
        for m in 1..=n {
            assert!((g.first[m] - p.first[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_data_is_exact() {
        // ∫₀ᵗ (t-s)^{α-1}/Γ(α) (1 + 2s) ds = t^α/Γ(α+1) + 2 t^{α+1}/Γ(α+2)
        let alpha: f64 = 1.4;
        let n = 20;
        let h = 0.05;
        let f = DMatrix::from_fn(1, n + 1, |_, k| C64::new(1.0 + 2.0 * k as f64 * h, 0.0));
        let out = ConvWeights::power(alpha, h, n).apply(&f);
        for k in 0..=n {
            let t = k as f64 * h;
            let exact = t.powf(alpha) / gamma_real(alpha + 1.0).unwrap()
                + 2.0 * t.powf(alpha + 1.0) / gamma_real(alpha + 2.0).unwrap();
            assert!((out[(0, k)].re - exact).abs() < 1e-13, "k = {k}");
        }
    }
}
