mod common;

use homog_core::intrinsic::{evaluate, field, oracle, Boundary, TestClass};
use homog_core::{GridFunction, MetricMeasureSpace, Modulus};
use proptest::prelude::*;

fn class_strategy() -> impl Strategy<Value = TestClass> {
    (0.2..=1.0f64, 0.5..2.0f64, 0.05..=1.0f64, any::<bool>()).prop_map(|(alpha, c, phi, pinned)| {
        let omega = Modulus::scaled(Modulus::power(alpha).unwrap(), c).unwrap();
        let boundary = if pinned { Boundary::Pinned } else { Boundary::WithinBall };
        TestClass::new(omega, phi, 2.0).unwrap().with_boundary(boundary)
    })
}

/// A center and a scale whose open ball keeps at most `keep` points.
fn scale_keeping(s: &MetricMeasureSpace, x: usize, keep: usize) -> i32 {
    let mut ds: Vec<f64> = (0..s.len()).map(|y| s.dist(x, y)).collect();
    ds.sort_by(f64::total_cmp);
    let limit = ds.get(keep).copied().unwrap_or(4.0 * s.diameter() + 1.0);
    limit.log2().floor() as i32
}

fn value(s: &MetricMeasureSpace, f: &[f64], x: usize, k: i32, class: &TestClass) -> f64 {
    evaluate(s, &GridFunction::new(f.to_vec()), x, k, class).unwrap().value
}

type Case = (MetricMeasureSpace, (Vec<f64>, Vec<f64>, usize, usize));

fn case() -> impl Strategy<Value = Case> {
    common::space_with(10, |n| (common::signed(n), common::signed(n), 0..n, 2..=n).boxed())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lp_inside_grid_oracle((s, (f, _, x, _)) in case(), class in class_strategy()) {
        let k = scale_keeping(&s, x, 3);
        let f = GridFunction::new(f);
        let ev = evaluate(&s, &f, x, k, &class).unwrap();
        let iv = oracle(&s, &f, x, k, &class, 1e-3).unwrap();
        prop_assert!(ev.ball.len() <= 3);
        prop_assert!(iv.contains(ev.value, 1e-9), "{} not in [{}, {}]", ev.value, iv.lo, iv.hi);
    }

    #[test]
    fn optimizer_is_feasible_and_attains((s, (f, _, x, keep)) in case(), class in class_strategy()) {
        let k = scale_keeping(&s, x, keep);
        let r = class.scale(k);
        let ev = evaluate(&s, &GridFunction::new(f.clone()), x, k, &class).unwrap();
        let ball = &ev.ball;
        let mu: f64 = ball.iter().map(|&y| s.mass(y)).sum();
        let psi: Vec<f64> = ev.optimizer.iter().map(|p| p * mu).collect();
        let tol = 1e-9;
        for (a, &y) in ball.iter().enumerate() {
            let cap = match class.boundary {
                Boundary::WithinBall => class.phi,
                Boundary::Pinned => (0..s.len())
                    .filter(|z| !ball.contains(z))
                    .map(|z| class.omega.at(s.dist(y, z) / r))
                    .fold(class.phi, f64::min),
            };
            prop_assert!(psi[a].abs() <= cap + tol);
            for (b, &z) in ball.iter().enumerate() {
                prop_assert!(psi[a] - psi[b] <= class.omega.at(s.dist(y, z) / r) + tol);
            }
        }
        let mean: f64 = ball.iter().zip(&psi).map(|(&y, p)| p * s.mass(y)).sum();
        prop_assert!(mean.abs() <= tol);
        let attained: f64 = ball.iter().zip(&ev.optimizer).map(|(&y, p)| f[y] * p * s.mass(y)).sum();
        prop_assert!((attained - ev.value).abs() <= tol * ev.value.max(1.0));
    }

    #[test]
    fn structural_properties((s, (f, g, x, keep)) in case(), class in class_strategy(), c in -3.0..3.0f64, t in 1.0..3.0f64) {
        let k = scale_keeping(&s, x, keep);
        let base = value(&s, &f, x, k, &class);
        let tol = 1e-9 * base.max(1.0);

        let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        prop_assert!(value(&s, &fg, x, k, &class) <= base + value(&s, &g, x, k, &class) + tol);

        let scaled: Vec<f64> = f.iter().map(|a| c * a).collect();
        prop_assert!((value(&s, &scaled, x, k, &class) - c.abs() * base).abs() <= tol * c.abs().max(1.0));

        let shifted: Vec<f64> = f.iter().map(|a| a + c).collect();
        prop_assert!((value(&s, &shifted, x, k, &class) - base).abs() <= tol);

        let r = class.scale(k);
        let outside: Vec<f64> = (0..s.len()).map(|y| if s.dist(x, y) < r { f[y] } else { 7.0 * g[y] }).collect();
        prop_assert!((value(&s, &outside, x, k, &class) - base).abs() <= tol);

        let wider = TestClass { omega: Modulus::scaled(class.omega.clone(), t).unwrap(), ..class.clone() };
        prop_assert!(value(&s, &f, x, k, &wider) >= base - tol);
        let taller = TestClass { phi: class.phi * t, ..class.clone() };
        prop_assert!(value(&s, &f, x, k, &taller) >= base - tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn field_matches_pointwise((s, (f, _, _, _)) in case(), class in class_strategy()) {
        let (lo, hi) = common::levels(&s, 2.0);
        let f = GridFunction::new(f);
        let fld = field(&s, &f, &class, lo, hi).unwrap();
        for k in lo..=hi {
            for y in 0..s.len() {
                let v = evaluate(&s, &f, y, k, &class).unwrap().value;
                prop_assert!((fld.get(y, k) - v).abs() <= 1e-12 * v.max(1.0));
            }
        }
    }

    #[test]
    fn mean_zero_bumps_vanish_away_from_their_cube((s, (f, _, _, _)) in case(), class in class_strategy()) {
        let sys = common::net_system(&s, 2.0);
        let (lo, hi) = (sys.k_min(), sys.k_max());
        let q = sys.cubes().iter().find(|q| q.members.len() >= 2 && q.members.len() < s.len());
        if let Some(q) = q {
            let members = &q.members;
            let mass: f64 = members.iter().map(|&y| s.mass(y)).sum();
            let avg: f64 = members.iter().map(|&y| f[y] * s.mass(y)).sum::<f64>() / mass;
            let b = GridFunction::new((0..s.len()).map(|y| if q.contains(y) { f[y] - avg } else { 0.0 }).collect());
            let fld = field(&s, &b, &class, lo, hi).unwrap();
            for k in lo..=hi {
                for x in 0..s.len() {
                    let gap = members.iter().map(|&y| s.dist(x, y)).fold(f64::INFINITY, f64::min);
                    if gap >= class.scale(k) {
                        prop_assert_eq!(fld.get(x, k), 0.0);
                    }
                }
            }
        }
    }
}
