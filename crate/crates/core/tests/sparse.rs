mod common;

use homog_core::dyadic::DyadicSystem;
use homog_core::intrinsic::{field, TestClass};
use homog_core::sparse::{sparse_dominate, DominationConfig, PairFunctional};
use homog_core::{GridFunction, MetricMeasureSpace, Modulus};
use proptest::prelude::*;

fn class(alpha: f64) -> TestClass {
    TestClass::new(Modulus::power(alpha).unwrap(), 1.0, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stopping_time_dominates(
        (s, f) in common::space_with(16, common::signed),
        alpha in 0.3..=1.0f64,
        eta in 0.2..0.8f64,
        delta_k in 0i32..=2,
    ) {
        prop_assume!(f.iter().any(|&v| v != f[0]));
        let system = common::net_system(&s, 2.0);
        let f = GridFunction::new(f);
        let cfg = DominationConfig::new(eta, delta_k);
        let res = sparse_dominate(&s, &system, &f, &class(alpha), &cfg).unwrap();
        prop_assert!(res.nonstop_violations.is_empty());
        prop_assert!(res.measured_constant.is_finite());

        // Splitting the scales of any pair at the stopping cubes above it
        // bounds F(x) by the sparse sum with the final stopping constant.
        let scale = res.gamma.sqrt() * res.log_dini / (1.0 - eta);
        let bound = (res.stop_constant * scale).powi(2);
        for x in 0..s.len() {
            prop_assert!(
                res.sup_f[x] <= bound * res.sparse_square[x] * (1.0 + 1e-9) + 1e-15,
                "F({}) = {} exceeds {}", x, res.sup_f[x], bound * res.sparse_square[x]
            );
        }

        let again = sparse_dominate(&s, &system, &f, &class(alpha), &cfg).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&res).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }
}

#[test]
fn pair_functional_is_translation_invariant() {
    let n = 256;
    let period = 32;
    let s = MetricMeasureSpace::euclidean_grid(1, n, 1.0).unwrap();
    let profile = [0.3, -1.0, 0.7, 0.2, -0.4, 1.0, 0.0, -0.6];
    let f = GridFunction::new((0..n).map(|i| profile[(i * 5 + (i % period) / 8) % 8] * (1.0 + (i % period) as f64 / 7.0)).collect());
    let cl = class(0.5);
    let (delta_k, dilation) = (1, 3.0);
    let system = DyadicSystem::standard_euclidean(&s, 0, 4).unwrap();
    let fld = field(&s, &f, &cl, -delta_k, 4 - delta_k).unwrap();
    let pair = PairFunctional::new(&s, &system, &fld, delta_k, dilation).unwrap();
    // Every ball used lies within 3·16 + 8 of its cube, so tops starting in
    // [64, 160] see no boundary.
    let tops: Vec<usize> = system
        .level(4)
        .iter()
        .copied()
        .filter(|&q| (64..=160).contains(&system.cube(q).members[0]))
        .collect();
    assert_eq!(tops.len(), 7);
    let (mut compared, mut largest) = (0, 0.0f64);
    for &p in &tops {
        let start = system.cube(p).members[0];
        let Some(&shifted) = tops.iter().find(|&&t| system.cube(t).members[0] == start + period) else {
            continue;
        };
        for q in std::iter::once(p).chain(system.descendants(p)) {
            let first = system.cube(q).members[0] + period;
            let level = system.cube(q).level;
            let twin = system.cube_at(first, level).unwrap();
            assert_eq!(system.cube(twin).members[0], first);
            let a = pair.value(&system, q, p).unwrap();
            let b = pair.value(&system, twin, shifted).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            compared += 1;
            largest = largest.max(a);
        }
    }
    assert!(compared > 0 && largest > 0.0);
}
