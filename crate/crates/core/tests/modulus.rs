use homog_core::Modulus;
use proptest::prelude::*;

#[test]
fn table_is_linear_interpolation() {
    let m = Modulus::table(vec![0.5, 1.0], vec![0.25, 0.3]).unwrap();
    assert!((m.at(0.25) - 0.125).abs() < 1e-15);
    assert!((m.at(0.75) - 0.275).abs() < 1e-15);
    assert_eq!(m.at(3.0), 0.3);
    assert!(Modulus::parse("scale:2:power:0.5").unwrap().at(4.0) == 4.0);
}

#[test]
fn truncated_table_is_finite() {
    // ω(t) = min(t, 1/4): ∫₀¹ ω dt/t = 1/4 + (1/4) ln 4.
    let m = Modulus::table(vec![0.0, 0.25], vec![0.0, 0.25]).unwrap();
    let expected = 0.25 + 0.25 * 4f64.ln();
    assert!((m.dini_norm(32).unwrap() - expected).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn power_norms_match_closed_forms(alpha in 0.1..=1.0f64) {
        // ∫₀¹ t^{α−1} dt = 1/α and ∫₀¹ t^{α−1} |log t| dt = 1/α².
        let m = Modulus::power(alpha).unwrap();
        prop_assert!((m.dini_norm(24).unwrap() * alpha - 1.0).abs() < 1e-6);
        prop_assert!((m.log_dini_norm(24).unwrap() * alpha * alpha - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sums_comparable_to_integrals(alpha in 0.1..=1.0f64, kappa in 1.5..4.0f64) {
        let m = Modulus::power(alpha).unwrap();
        let r = m.dini_sum(kappa).unwrap() / m.dini_norm(16).unwrap();
        prop_assert!(r >= 1.0 / (2.0 * kappa) && r <= 2.0 * kappa, "{}", r);
        let c = (2.0 * kappa).powi(2);
        let r = m.log_dini_sum(kappa).unwrap() / m.log_dini_norm(16).unwrap();
        prop_assert!(r >= 1.0 / c && r <= c, "{}", r);
    }

    #[test]
    fn norms_scale_linearly(alpha in 0.1..=1.0f64, c in 0.01..100.0f64) {
        let m = Modulus::power(alpha).unwrap();
        let s = Modulus::scaled(m.clone(), c).unwrap();
        let (a, b) = (m.dini_norm(16).unwrap(), s.dini_norm(16).unwrap());
        prop_assert!((b - c * a).abs() <= 1e-12 * b);
        let (a, b) = (m.log_dini_norm(16).unwrap(), s.log_dini_norm(16).unwrap());
        prop_assert!((b - c * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn norms_monotone(a1 in 0.1..=1.0f64, a2 in 0.1..=1.0f64, c in 1.0..3.0f64) {
        // t^{max} ≤ t^{min} ≤ c t^{min} on [0,1].
        let small = Modulus::power(a1.max(a2)).unwrap();
        let large = Modulus::scaled(Modulus::power(a1.min(a2)).unwrap(), c).unwrap();
        prop_assert!(small.dini_norm(16).unwrap() <= large.dini_norm(16).unwrap() * (1.0 + 1e-12));
        prop_assert!(small.log_dini_norm(16).unwrap() <= large.log_dini_norm(16).unwrap() * (1.0 + 1e-12));
    }
}
