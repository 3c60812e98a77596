//! Exhaustive grid search for tiny balls, independent of the simplex.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::space::{GridFunction, MetricMeasureSpace};

use super::{Boundary, TestClass};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OracleInterval {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }
}

/// Brackets `A_ω f(x,k)` for balls of at most three points by scanning
/// `φ ∈ {−M, −M+δ, …, M}` on the first ball point, solving the mean-zero
/// constraint for the heaviest one and, with three points, the remaining
/// coordinate exactly over its feasible interval. `lo` is the best feasible
/// value found and `hi = lo + δ Σ_B |f| μ`. The class `Φ` may be zero here.
pub fn oracle(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    x: usize,
    k: i32,
    class: &TestClass,
    delta: f64,
) -> Result<OracleInterval> {
    f.check_len(space)?;
    space.check_point(x)?;
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let s = class.kappa.powi(k);
    let mut ball: Vec<usize> = (0..space.len()).filter(|&y| space.dist(x, y) < s).collect();
    // The heaviest point absorbs the mean-zero correction, which then moves
    // by at most the grid step per free coordinate.
    if let Some(heavy) = (0..ball.len()).max_by(|&a, &b| space.mass(ball[a]).total_cmp(&space.mass(ball[b]))) {
        let last = ball.len() - 1;
        ball.swap(heavy, last);
    }
    if ball.len() > 3 {
        return Err(invalid(format!("oracle handles balls of at most 3 points, got {}", ball.len())));
    }
    let m = ball.len();
    let mu: f64 = ball.iter().map(|&y| space.mass(y)).sum();
    let cap = class.phi.max(0.0) / mu;
    let lip = |a: usize, b: usize| class.omega.at(space.dist(a, b) / s) / mu;
    let bound: Vec<f64> = ball
        .iter()
        .map(|&y| match class.boundary {
            Boundary::WithinBall => cap,
            Boundary::Pinned => (0..space.len())
                .filter(|z| !ball.contains(z))
                .map(|z| lip(y, z))
                .fold(cap, f64::min),
        })
        .collect();
    let slack = |v: f64| v * (1.0 + 1e-12) + 1e-15;
    let feasible = |phi: &[f64]| -> bool {
        (0..m).all(|i| phi[i].abs() <= slack(bound[i]))
            && (0..m).all(|i| (i + 1..m).all(|j| (phi[i] - phi[j]).abs() <= slack(lip(ball[i], ball[j]))))
    };
    let objective = |phi: &[f64]| -> f64 {
        ball.iter()
            .zip(phi)
            .map(|(&y, p)| f[y] * p * space.mass(y))
            .sum::<f64>()
            .abs()
    };
    let steps = if cap > 0.0 { (2.0 * cap / delta).ceil() as usize } else { 0 };
    let value_at = |i: usize| (-cap + i as f64 * delta).min(cap);
    let last = m - 1;
    let mut phi = vec![0.0; m];
    let mut best: f64 = 0.0;
    let mut scan = |phi: &mut Vec<f64>| {
        let partial: f64 = (0..last).map(|i| phi[i] * space.mass(ball[i])).sum();
        phi[last] = -partial / space.mass(ball[last]);
        if feasible(phi) {
            best = best.max(objective(phi));
        }
    };
    match m {
        1 => scan(&mut phi),
        2 => {
            for a in 0..=steps {
                phi[0] = value_at(a);
                scan(&mut phi);
            }
        }
        _ => {
            // Grid on φ₀; for each grid value the feasible φ₁ form an
            // interval and the objective is largest at one of its ends.
            let (m0, m1, m2) = (space.mass(ball[0]), space.mass(ball[1]), space.mass(ball[2]));
            let (l01, l02, l12) = (lip(ball[0], ball[1]), lip(ball[0], ball[2]), lip(ball[1], ball[2]));
            for a in 0..=steps {
                let p0 = value_at(a);
                // φ₂ = shift + slope·φ₁.
                let (shift, slope) = (-m0 * p0 / m2, -m1 / m2);
                let rows = [
                    (1.0, 0.0, bound[1]),
                    (1.0, -p0, l01),
                    (slope, shift, bound[2]),
                    (slope, shift - p0, l02),
                    (1.0 - slope, -shift, l12),
                ];
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (coef, c, r) in rows {
                    let (u, v) = ((-r - c) / coef, (r - c) / coef);
                    lo = lo.max(u.min(v));
                    hi = hi.min(u.max(v));
                }
                if lo > hi {
                    continue;
                }
                for p1 in [lo, hi] {
                    phi[0] = p0;
                    phi[1] = p1;
                    scan(&mut phi);
                }
            }
        }
    }
    let width = if cap > 0.0 {
        delta * ball.iter().map(|&y| f[y].abs() * space.mass(y)).sum::<f64>()
    } else {
        0.0
    };
    Ok(OracleInterval {
        lo: best,
        hi: best + width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::Modulus;

    fn two_point_class(phi: f64) -> TestClass {
        TestClass {
            omega: Modulus::power(1.0).unwrap(),
            phi,
            kappa: 2.0,
            boundary: Boundary::Pinned,
        }
    }

    #[test]
    fn brackets_two_point_example() {
        let s = MetricMeasureSpace::euclidean_grid(1, 2, 1.0).unwrap();
        let f = GridFunction::new(vec![1.0, -1.0]);
        let iv = oracle(&s, &f, 0, 1, &two_point_class(1.0), 1e-3).unwrap();
        assert!(iv.lo <= 0.25 && 0.25 <= iv.hi, "{iv:?}");
        assert!(iv.hi - iv.lo <= 2e-3 + 1e-15);
    }

    #[test]
    fn constant_and_zero_cap() {
        let s = MetricMeasureSpace::euclidean_grid(1, 3, 1.0).unwrap();
        let f = GridFunction::constant(3, 2.0);
        let iv = oracle(&s, &f, 1, 1, &two_point_class(1.0), 1e-2).unwrap();
        assert!(iv.lo.abs() < 1e-12);
        assert!((iv.hi - iv.lo - 1e-2 * 6.0).abs() < 1e-12);
        let g = GridFunction::new(vec![1.0, -3.0, 2.0]);
        let iv = oracle(&s, &g, 1, 1, &two_point_class(0.0), 1e-2).unwrap();
        assert_eq!((iv.lo, iv.hi), (0.0, 0.0));
    }

    #[test]
    fn rejects_large_balls() {
        let s = MetricMeasureSpace::euclidean_grid(1, 8, 1.0).unwrap();
        let f = GridFunction::zeros(8);
        assert!(oracle(&s, &f, 4, 2, &two_point_class(1.0), 1e-2).is_err());
    }
}
