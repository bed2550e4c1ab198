//! Property-based invariants for the spectral core.

use modkg_core::testutil::default_grid;
use modkg_core::{
    forward_transform, inverse_transform, lp_norm, Complex64, Field,
};
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)),
        len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transform_roundtrip_is_identity(values in complex_vec(64)) {
        let spec = default_grid(1, 64);
        let f = Field::new(spec, values).unwrap();
        let back = inverse_transform(&forward_transform(&f));
        let num: f64 = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>().max(1e-30);
        prop_assert!((num / den).sqrt() <= 1e-12);
    }

    #[test]
    fn plancherel_identity(values in complex_vec(64)) {
        let spec = default_grid(1, 64);
        let f = Field::new(spec, values).unwrap();
        let a = lp_norm(&f, 2.0).unwrap();
        let b = forward_transform(&f).l2_norm();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-30));
    }

    #[test]
    fn transform_is_linear(u in complex_vec(64), v in complex_vec(64), lam in -3.0f64..3.0) {
        let spec = default_grid(1, 64);
        let fu = Field::new(spec, u).unwrap();
        let fv = Field::new(spec, v).unwrap();
        let combo = fu.axpy(Complex64::new(lam, 0.0), &fv).unwrap();
        let lhs = forward_transform(&combo);
        let gu = forward_transform(&fu);
        let gv = forward_transform(&fv);
        for ((l, a), b) in lhs.coeffs().iter().zip(gu.coeffs()).zip(gv.coeffs()) {
            let want = a + lam * b;
            prop_assert!((l - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn lp_norm_is_homogeneous(values in complex_vec(64), lam in 0.01f64..100.0, p in 1.0f64..6.0) {
        let spec = default_grid(1, 64);
        let f = Field::new(spec, values).unwrap();
        let scaled = f.scale(Complex64::new(lam, 0.0));
        let a = lp_norm(&scaled, p).unwrap();
        let b = lp_norm(&f, p).unwrap();
        prop_assert!((a - lam * b).abs() <= 1e-13 * a.max(1e-30));
    }

    #[test]
    fn real_data_has_hermitian_spectrum(reals in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let spec = default_grid(1, 64);
        let values: Vec<Complex64> = reals.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        let f = Field::new(spec, values).unwrap();
        let g = forward_transform(&f);
        let n = spec.points;
        // c(-j) = conj(c(j)) for j and -j both representable
        for t in 1..n {
            let j = t as i64 - (n / 2) as i64;
            let t_neg = (-j + (n / 2) as i64) as usize;
            if t_neg >= n {
                continue;
            }
            let a = g.coeffs()[t];
            let b = g.coeffs()[t_neg].conj();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn power_nonlinearity_scales(values in complex_vec(64), lam in 0.1f64..4.0, k in 0.3f64..4.0) {
        let spec = default_grid(1, 64);
        let f = Field::new(spec, values).unwrap();
        let a = modkg_core::ops::power_nonlinearity(&f.scale(Complex64::new(lam, 0.0)), k, 1.0);
        let b = modkg_core::ops::power_nonlinearity(&f, k, 1.0)
            .scale(Complex64::new(lam * lam.powf(k), 0.0));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }
}
