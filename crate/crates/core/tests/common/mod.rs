#![allow(dead_code)]

use homog_core::dyadic::DyadicSystem;
use homog_core::{GridFunction, MetricMeasureSpace};
use proptest::prelude::*;

/// Points in `[0,1]^d` (d = 1 or 2) with masses in `[0.5, 2]`.
pub fn space(max_n: usize) -> impl Strategy<Value = MetricMeasureSpace> {
    (1usize..=2, 2usize..=max_n).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(0.0..1.0f64, d), n),
            prop::collection::vec(0.5..2.0f64, n),
        )
            .prop_map(|(coords, mass)| MetricMeasureSpace::from_coords(coords, mass).unwrap())
    })
}

pub fn space_with<T: std::fmt::Debug>(
    max_n: usize,
    values: impl Fn(usize) -> BoxedStrategy<T>,
) -> impl Strategy<Value = (MetricMeasureSpace, T)> {
    space(max_n).prop_flat_map(move |s| {
        let n = s.len();
        (Just(s), values(n))
    })
}

pub fn signed(n: usize) -> BoxedStrategy<Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).boxed()
}

pub fn nonnegative(n: usize) -> BoxedStrategy<Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).boxed()
}

pub fn positive(n: usize) -> BoxedStrategy<Vec<f64>> {
    prop::collection::vec(0.05..5.0f64, n).boxed()
}

/// Levels from singletons to a single root.
pub fn levels(space: &MetricMeasureSpace, kappa: f64) -> (i32, i32) {
    let spacing = space.min_spacing().unwrap_or(1.0);
    let k_min = (spacing.ln() / kappa.ln()).floor() as i32 - 1;
    let mut k_max = k_min;
    while kappa.powi(k_max) <= space.diameter() {
        k_max += 1;
    }
    (k_min, k_max)
}

pub fn net_system(space: &MetricMeasureSpace, kappa: f64) -> DyadicSystem {
    let (lo, hi) = levels(space, kappa);
    let order: Vec<usize> = (0..space.len()).collect();
    DyadicSystem::build(space, kappa, lo, hi, &order).unwrap()
}

pub fn func(v: Vec<f64>) -> GridFunction {
    GridFunction::new(v)
}

/// Brute force `max_{B ∋ x} ⨍_B v` over the balls `{y : d(c,y) ≤ d(c,z)}`,
/// which are all the balls a finite space realizes.
pub fn brute_maximal(space: &MetricMeasureSpace, v: &[f64]) -> Vec<f64> {
    let n = space.len();
    let mut out = vec![0.0f64; n];
    for c in 0..n {
        for z in 0..n {
            let r = space.dist(c, z);
            let ball: Vec<usize> = (0..n).filter(|&y| space.dist(c, y) <= r).collect();
            let mass: f64 = ball.iter().map(|&y| space.mass(y)).sum();
            let avg = ball.iter().map(|&y| v[y] * space.mass(y)).sum::<f64>() / mass;
            for &y in &ball {
                out[y] = out[y].max(avg);
            }
        }
    }
    out
}
