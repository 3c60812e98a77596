mod common;

use homog_core::intrinsic::TestClass;
use homog_core::squarefn::{intrinsic_square, weighted_l2_ratio};
use homog_core::{GridFunction, MetricMeasureSpace, Modulus};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn class(alpha: f64, c: f64, phi: f64) -> TestClass {
    let omega = Modulus::scaled(Modulus::power(alpha).unwrap(), c).unwrap();
    TestClass::new(omega, phi, 2.0).unwrap()
}

fn g(s: &MetricMeasureSpace, f: &[f64], class: &TestClass, beta: f64) -> Vec<f64> {
    let (lo, hi) = common::levels(s, 2.0);
    intrinsic_square(s, &GridFunction::new(f.to_vec()), class, beta, lo, hi)
        .unwrap()
        .g
        .0
}

type Pair = (MetricMeasureSpace, (Vec<f64>, Vec<f64>));

fn pair() -> impl Strategy<Value = Pair> {
    common::space_with(8, |n| (common::signed(n), common::signed(n)).boxed())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn square_function_is_a_seminorm(
        (s, (f, h)) in pair(),
        alpha in 0.2..=1.0f64,
        phi in 0.05..=1.0f64,
        c in -3.0..3.0f64,
        beta in 1.0..4.0f64,
    ) {
        let cl = class(alpha, 1.0, phi);
        let sum: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = f.iter().map(|a| c * a).collect();
        let (gf, gh) = (g(&s, &f, &cl, beta), g(&s, &h, &cl, beta));
        let gs = g(&s, &sum, &cl, beta);
        let gc = g(&s, &scaled, &cl, beta);
        for x in 0..s.len() {
            prop_assert!(gs[x] <= gf[x] + gh[x] + 1e-9);
            prop_assert!((gc[x] - c.abs() * gf[x]).abs() <= 1e-9 * (1.0 + gc[x]));
        }
    }

    #[test]
    fn square_function_grows_with_the_class(
        (s, (f, _)) in pair(),
        alpha in 0.2..=1.0f64,
        phi in 0.05..=0.5f64,
        grow in 1.0..3.0f64,
    ) {
        let base = g(&s, &f, &class(alpha, 1.0, phi), 1.0);
        let wide_omega = g(&s, &f, &class(alpha, grow, phi), 1.0);
        let wide_phi = g(&s, &f, &class(alpha, 1.0, phi * grow), 1.0);
        for x in 0..s.len() {
            prop_assert!(wide_omega[x] >= base[x] - 1e-9);
            prop_assert!(wide_phi[x] >= base[x] - 1e-9);
        }
    }

    #[test]
    fn constants_have_no_square_function((s, _) in pair(), c in -5.0..5.0f64) {
        let f = vec![c; s.len()];
        for v in g(&s, &f, &class(0.5, 1.0, 1.0), 2.0) {
            prop_assert!(v.abs() <= 1e-9);
        }
    }
}

#[test]
fn l2_ratio_does_not_depend_on_the_aperture() {
    let s = MetricMeasureSpace::euclidean_grid(1, 64, 1.0).unwrap();
    let cl = class(0.5, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 1.0;
    for _ in 0..4 {
        let f = GridFunction::new((0..64).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let v = GridFunction::new((0..64).map(|_| rng.gen_range(0.1..3.0)).collect());
        let ratios: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&b| weighted_l2_ratio(&s, &f, &v, &cl, b, 0, 7).unwrap())
            .collect();
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.0);
        worst = worst.max(hi / lo);
    }
    assert!(worst <= 2.0, "ratio varies by {worst}");
}
