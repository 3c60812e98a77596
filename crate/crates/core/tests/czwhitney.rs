mod common;

use homog_core::czwhitney::{cube_diameter, cz_decompose, whitney_violations};
use homog_core::squarefn::scale_radii;
use homog_core::{GridFunction, MetricMeasureSpace};
use proptest::prelude::*;

fn case() -> impl Strategy<Value = (MetricMeasureSpace, (Vec<f64>, f64, f64))> {
    common::space_with(24, |n| (common::signed(n), 0.2..0.95f64, 1.0..4.0f64).boxed())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decomposition_is_exact((s, (f, q, beta)) in case(), cw in 0.5..2.0f64) {
        let n = s.len();
        let system = common::net_system(&s, 2.0);
        let f = GridFunction::new(f);
        let mut mf = s.uncentered_maximal(&f.map(f64::abs)).unwrap().0;
        mf.sort_by(f64::total_cmp);
        let t = mf[((n - 1) as f64 * q) as usize];
        prop_assume!(t > 0.0);
        let radii = scale_radii(2.0, system.k_min(), system.k_max());
        let lambda = t * s.aperture_gamma(beta, &radii).unwrap().sqrt() * (1.0 + 1e-12);
        let cz = cz_decompose(&s, &system, &f, lambda, beta, cw).unwrap();
        let scale = f.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));

        let back = cz.reconstruct();
        for x in 0..n {
            prop_assert!((back[x] - f[x]).abs() <= 1e-12 * scale);
        }
        let mut seen = vec![false; n];
        for b in &cz.bad {
            prop_assert_eq!(&b.members, &system.cube(b.cube).members);
            prop_assert!(b.integral(&s).abs() <= 1e-12 * scale * s.total_mass());
            for &y in &b.members {
                prop_assert!(cz.omega.binary_search(&y).is_ok());
                prop_assert!(!seen[y], "Whitney cubes overlap at {}", y);
                seen[y] = true;
            }
        }
        for x in 0..n {
            if !seen[x] {
                prop_assert_eq!(cz.good[x], f[x]);
            }
        }
        for &y in &cz.uncovered {
            prop_assert!(!seen[y] && cz.omega.binary_search(&y).is_ok());
        }
        if !cz.omega.is_empty() && cz.omega.len() < n {
            let bad = whitney_violations(&s, &system, &cz.omega, &cz.whitney, beta, cw).unwrap();
            prop_assert!(bad.is_empty());
        }
        for &id in &cz.whitney {
            let dilate = system.dilate_members(&s, id, cw * beta);
            let escapes = dilate.iter().any(|y| cz.omega.binary_search(y).is_err());
            prop_assert_eq!(escapes, cz.dilate_escapes.contains(&id));
            prop_assert!(cube_diameter(&s, &system.cube(id).members) * cw * beta <= s.diameter() + 1e-12);
        }
    }
}

#[test]
fn spike_gives_one_bad_part_per_whitney_cube() {
    let s = MetricMeasureSpace::euclidean_grid(1, 32, 1.0).unwrap();
    let system = homog_core::dyadic::DyadicSystem::standard_euclidean(&s, 0, 5).unwrap();
    let mut v = vec![0.0; 32];
    v[16] = 100.0;
    let cz = cz_decompose(&s, &system, &GridFunction::new(v), 10.0, 1.0, 1.0).unwrap();
    assert!(cz.omega.contains(&16));
    assert_eq!(cz.bad.len(), cz.whitney.len());
    assert!(cz.good_constant.is_finite());
}
