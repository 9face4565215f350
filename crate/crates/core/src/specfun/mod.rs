//! Scalar special functions.

mod gamma;
mod mittag_leffler;

pub use gamma::{gamma, gamma_real, ln_gamma, rgamma};
pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_contour, mittag_leffler_real, mittag_leffler_series,
    mittag_leffler_series_capped, MlParams, DEFAULT_TERM_CAP, DEFAULT_TOL, SWITCH_RADIUS,
};

use crate::error::Result;

/// Euler Beta function `B(a, b) = Γ(a) Γ(b) / Γ(a + b)` for `a, b > 0`.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_values() {
        assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        // B(1/2, 1/2) = π
        assert!((beta_fn(0.5, 0.5).unwrap() - std::f64::consts::PI).abs() < 1e-13);
        // B(a, b) = Γ(a)Γ(b)/Γ(a+b)
        let g = gamma_real(2.3).unwrap() * gamma_real(0.7).unwrap() / gamma_real(3.0).unwrap();
        assert!((beta_fn(2.3, 0.7).unwrap() - g).abs() < 1e-13);
    }
}
