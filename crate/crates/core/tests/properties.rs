//! Property tests for coefficient structure and the factor-ratio identity.

use dxray_core::character::character_table;
use dxray_core::series::{ExponentRule, PrimeCoefficientMap};
use dxray_core::theorem_lab::{factor_identity_residual, ratio_product_trace};
use dxray_core::{Complex64, SeriesSpec};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn custom_spec() -> SeriesSpec {
    let mut lambdas = BTreeMap::new();
    lambdas.insert(2, 0.9);
    lambdas.insert(3, 1.3);
    lambdas.insert(7, 2.2);
    let coeffs = PrimeCoefficientMap::constant(Complex64::new(0.6, -0.3)).with_override(5, Complex64::new(-1.0, 0.25));
    SeriesSpec::new("custom", coeffs, ExponentRule::ExplicitPrimeExponents(lambdas))
}

proptest! {
    #[test]
    fn coefficients_are_totally_multiplicative(m in 1u64..3000, n in 1u64..3000) {
        let spec = custom_spec();
        let lhs = spec.coefficient(m * n).unwrap();
        let rhs = spec.coefficient(m).unwrap() * spec.coefficient(n).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn exponents_are_additive(m in 1u64..3000, n in 1u64..3000) {
        let spec = custom_spec();
        let lhs = spec.exponent(m * n).unwrap();
        let rhs = spec.exponent(m).unwrap() + spec.exponent(n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn character_coefficients_match_the_character(idx in 0usize..4, n in 1u64..10_000) {
        let chi = character_table(5).unwrap()[idx].clone();
        let spec = SeriesSpec::dirichlet(chi.clone());
        prop_assert!((spec.coefficient(n).unwrap() - chi.value(n)).norm() <= 1e-12);
        prop_assert!((spec.exponent(n).unwrap() - (n as f64).ln()).abs() <= 1e-15);
    }

    #[test]
    fn factor_identity_holds(
        arg in 0.0f64..std::f64::consts::TAU,
        modulus in 0.0f64..1.0,
        lambda in 0.1f64..10.0,
        sigma in 0.01f64..0.99,
        t in -100.0f64..100.0,
    ) {
        let a = Complex64::from_polar(modulus, arg);
        prop_assert!(factor_identity_residual(a, lambda, sigma, t) <= 1e-12);
    }

    #[test]
    fn ratio_trace_is_exactly_one_on_the_line(t in 0.0f64..1000.0) {
        let tr = ratio_product_trace(&SeriesSpec::zeta(), 0.5, t, &[10, 100, 1000]).unwrap();
        for v in tr.values {
            prop_assert!((v - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        }
    }
}

#[test]
fn tables_agree_with_pointwise_coefficients() {
    let spec = custom_spec();
    let (a, lam) = spec.tables(500).unwrap();
    for n in 1..=500u64 {
        assert!((a[n as usize] - spec.coefficient(n).unwrap()).norm() <= 1e-12);
        assert!((lam[n as usize] - spec.exponent(n).unwrap()).abs() <= 1e-12);
    }
}
