use fracevo::fracops::{caputo_derivative, frac_integral, rl_derivative, PowerTerm, SampledPath, C64};
use fracevo::specfun::gamma_real;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn power(t_end: f64, n: usize, p: f64) -> SampledPath {
    let terms = vec![PowerTerm::new(p, DVector::from_element(1, C64::new(1.0, 0.0)))];
    SampledPath::from_parts(t_end, DMatrix::zeros(1, n + 1), terms).unwrap()
}

#[test]
fn csv_round_trip_is_exact() {
    let f = SampledPath::from_fn(1.5, 37, 2, |t| DVector::from_vec(vec![C64::new(t.sin(), -t), C64::new(1.0 / 3.0, t.exp())])).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let g = SampledPath::read_csv(buf.as_slice()).unwrap();
    assert_eq!(f.values(), g.values());
    assert_eq!(g.t_end(), 1.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integral_of_power_is_exact(p in 0.0f64..2.0, a in 0.05f64..2.0) {
        let f = power(2.0, 64, p);
        let g = frac_integral(&f, a).unwrap();
        let c = gamma_real(p + 1.0).unwrap() / gamma_real(p + a + 1.0).unwrap();
        for k in 0..=64 {
            let t = g.time(k);
            let e = c * t.powf(p + a);
            prop_assert!((g.values()[(0, k)].re - e).abs() < 1e-12 * e.max(1.0));
        }
    }

    #[test]
    fn integrals_compose(a in 0.1f64..1.0, b in 0.1f64..1.0) {
        let f = SampledPath::from_scalar_fn(1.0, 512, |t| (2.0 * t).cos() + t).unwrap();
        let ab = frac_integral(&frac_integral(&f, a).unwrap(), b).unwrap();
        let direct = frac_integral(&f, a + b).unwrap();
        prop_assert!(ab.sub(&direct).unwrap().sup_norm() < 1e-5);
    }

    #[test]
    fn derivative_inverts_integral(a in 0.1f64..1.9) {
        prop_assume!((a - 1.0).abs() > 0.02);
        let f = SampledPath::from_scalar_fn(1.0, 1024, |t| (3.0 * t).sin() + 1.0).unwrap();
        let back = rl_derivative(&frac_integral(&f, a).unwrap(), a).unwrap();
        prop_assert!(back.sub(&f).unwrap().sup_norm_from(20) < 1e-3, "{}", back.sub(&f).unwrap().sup_norm_from(20));
    }

    #[test]
    fn operators_are_linear(a in 0.1f64..1.9, s in -3.0f64..3.0) {
        prop_assume!((a - 1.0).abs() > 0.02);
        let f = SampledPath::from_scalar_fn(1.0, 128, |t| t * t - t).unwrap();
        let g = SampledPath::from_scalar_fn(1.0, 128, |t| (t + 0.5).ln()).unwrap();
        let z = C64::new(s, 0.5);
        let comb = f.lin_comb(C64::new(1.0, 0.0), &g, z).unwrap();
        for op in [frac_integral, rl_derivative, caputo_derivative] {
            let lhs = op(&comb, a).unwrap();
            let rhs = op(&f, a).unwrap().lin_comb(C64::new(1.0, 0.0), &op(&g, a).unwrap(), z).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-9 * rhs.sup_norm().max(1.0));
        }
    }
}
