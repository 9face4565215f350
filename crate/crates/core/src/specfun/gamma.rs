//! Gamma function for complex and real arguments.
//!
//! Lanczos approximation (g = 7, nine coefficients) in the half-plane
//! `Re z >= 1/2`, reflection `Γ(z) Γ(1 - z) = π / sin(πz)` elsewhere.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn is_nonpositive_integer(z: Complex<f64>) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `ln Γ(z)` for `Re z >= 1/2` (principal-ish branch, used only through `exp`).
fn ln_gamma_right(z: Complex<f64>) -> Complex<f64> {
    let z = z - 1.0;
    let mut series = Complex::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (z + 0.5) * t.ln() - t + LN_SQRT_2PI + series.ln()
}

/// Complex gamma function.
pub fn gamma(z: Complex<f64>) -> Result<Complex<f64>> {
    if is_nonpositive_integer(z) {
        return Err(Error::GammaPole(z.re));
    }
    if z.re < 0.5 {
        let s = (z * PI).sin();
        let g = ln_gamma_right(Complex::new(1.0, 0.0) - z).exp();
        Ok(Complex::new(PI, 0.0) / (s * g))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// Real gamma function.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex::new(x, 0.0)).map(|g| g.re)
}

/// Reciprocal gamma `1/Γ(x)`, an entire function: zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        return 0.0;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma_real(x).expect("poles handled above")
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range
        return ln_gamma_right(Complex::new(x + 1.0, 0.0)).re - x.ln();
    }
    ln_gamma_right(Complex::new(x, 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn factorial_values() {
        assert_relative_eq!(gamma_real(1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma_real(5.0).unwrap(), 24.0, max_relative = 1e-12);
        assert_relative_eq!(gamma_real(0.5).unwrap(), 1.772_453_850_905_516, max_relative = 1e-12);
        assert_relative_eq!(gamma_real(21.0).unwrap(), 2.432_902_008_176_64e18, max_relative = 1e-12);
    }

    #[test]
    fn large_and_negative_arguments() {
        // Γ(50) = 49!
        assert_relative_eq!(gamma_real(50.0).unwrap(), 6.082_818_640_342_675e62, max_relative = 1e-12);
        // Γ(-1/2) = -2√π
        assert_relative_eq!(gamma_real(-0.5).unwrap(), -3.544_907_701_811_032, max_relative = 1e-12);
        // Γ(-7/2) = 16√π / 105
        assert_relative_eq!(gamma_real(-3.5).unwrap(), 0.270_088_205_852_269_1, max_relative = 1e-12);
    }

    #[test]
    fn imaginary_unit() {
        // Γ(i) = -0.1549498283018106 - 0.4980156681183560 i
        let g = gamma(c(0.0, 1.0)).unwrap();
        assert!((g - c(-0.154_949_828_301_810_6, -0.498_015_668_118_356)).norm() < 1e-13);
    }

    #[test]
    fn poles_are_errors() {
        for z in [0.0, -1.0, -2.0, -17.0] {
            assert!(matches!(gamma_real(z), Err(Error::GammaPole(_))));
        }
        assert_eq!(rgamma(-3.0), 0.0);
        assert_eq!(rgamma(0.0), 0.0);
    }

    #[test]
    fn recurrence_on_right_half_plane_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let z = c(0.3 + 2.5 * i as f64, -12.0 + 2.7 * j as f64);
                let lhs = gamma(z + 1.0).unwrap();
                let rhs = z * gamma(z).unwrap();
                assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm(), "z = {z}");
            }
        }
    }

    #[test]
    fn reflection_on_strip() {
        for i in 1..20 {
            for j in 0..5 {
                let z = c(i as f64 / 20.0, -2.0 + j as f64);
                let prod = gamma(z).unwrap() * gamma(c(1.0, 0.0) - z).unwrap() * (z * PI).sin() / PI;
                assert!((prod - 1.0).norm() <= 1e-10, "z = {z}: {prod}");
            }
        }
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for x in [0.1, 0.7, 1.0, 3.3, 12.5, 100.0] {
            assert_relative_eq!(ln_gamma(x), gamma_real(x).unwrap().ln(), max_relative = 1e-12, epsilon = 1e-14);
        }
        // Stirling check far out
        let x: f64 = 1000.0;
        let stirling = (x - 0.5) * x.ln() - x + LN_SQRT_2PI + 1.0 / (12.0 * x);
        assert_relative_eq!(ln_gamma(x), stirling, max_relative = 1e-12);
    }
}
