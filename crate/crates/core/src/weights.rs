//! Weight characteristics over a dyadic system, reverse Hölder exponents,
//! power weights and weak `L^p` norms.

use serde::Serialize;

use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{invalid, Error, Result};
use crate::space::{GridFunction, MetricMeasureSpace};
use crate::squarefn::weak_sup;

/// A pair of weights `(w, σ)` and an exponent `p ∈ (1,∞)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightPair {
    pub w: GridFunction,
    pub sigma: GridFunction,
    pub p: f64,
}

impl WeightPair {
    pub fn new(space: &MetricMeasureSpace, w: GridFunction, sigma: GridFunction, p: f64) -> Result<Self> {
        check_p(p)?;
        check_positive(space, &w)?;
        check_positive(space, &sigma)?;
        Ok(Self { w, sigma, p })
    }

    /// The one-weight pair `(w, w^{1−p'})`.
    pub fn dual(space: &MetricMeasureSpace, w: GridFunction, p: f64) -> Result<Self> {
        check_p(p)?;
        let sigma = w.map(|v| v.powf(1.0 - conjugate(p)));
        Self::new(space, w, sigma, p)
    }

    pub fn p_prime(&self) -> f64 {
        conjugate(self.p)
    }
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must lie in (1,∞), got {p}")));
    }
    Ok(())
}

fn check_positive(space: &MetricMeasureSpace, w: &GridFunction) -> Result<()> {
    w.check_len(space)?;
    match w.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(i) => Err(invalid(format!("weight must be positive and finite, got {} at {i}", w[i]))),
        None => Ok(()),
    }
}

fn cube_averages(space: &MetricMeasureSpace, system: &DyadicSystem, v: &GridFunction) -> Vec<f64> {
    system
        .cubes()
        .iter()
        .map(|q| v.average_over(space, &q.members))
        .collect()
}

/// `[w,σ]_{A_p} = max_Q (w)_Q (σ)_Q^{p−1}` over the cubes of the system.
pub fn two_weight_ap(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    w: &GridFunction,
    sigma: &GridFunction,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    check_positive(space, w)?;
    check_positive(space, sigma)?;
    let aw = cube_averages(space, system, w);
    let asg = cube_averages(space, system, sigma);
    Ok(aw
        .iter()
        .zip(&asg)
        .map(|(a, s)| a * s.powf(p - 1.0))
        .fold(0.0, f64::max))
}

/// The same characteristic with the supremum over all realized balls.
pub fn two_weight_ap_balls(
    space: &MetricMeasureSpace,
    w: &GridFunction,
    sigma: &GridFunction,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    check_positive(space, w)?;
    check_positive(space, sigma)?;
    let mut best: f64 = 0.0;
    for x in 0..space.len() {
        let order = space.sorted_from(x);
        let (mut m, mut sw, mut ss) = (0.0, 0.0, 0.0);
        for (i, &(d, y)) in order.iter().enumerate() {
            let mass = space.mass(y);
            m += mass;
            sw += w[y] * mass;
            ss += sigma[y] * mass;
            let closes_ball = order.get(i + 1).is_none_or(|&(next, _)| next > d);
            if closes_ball {
                best = best.max((sw / m) * (ss / m).powf(p - 1.0));
            }
        }
    }
    Ok(best)
}

/// `M_D v(x) = max_{Q ∋ x} ⨍_Q |v|`.
pub fn dyadic_maximal(space: &MetricMeasureSpace, system: &DyadicSystem, v: &GridFunction) -> Result<GridFunction> {
    v.check_len(space)?;
    let abs = v.map(f64::abs);
    let avg = cube_averages(space, system, &abs);
    let mut out = vec![0.0; space.len()];
    for q in system.cubes() {
        for &x in &q.members {
            out[x] = f64::max(out[x], avg[q.id]);
        }
    }
    Ok(GridFunction(out))
}

/// `max_Q w(Q)^{-1} ∫_Q M_D(w 1_Q) dμ`. Inside `Q` only cubes `R ⊆ Q`
/// matter, since larger cubes average to at most `(w)_Q`.
pub fn fujii_wilson_ainfty(space: &MetricMeasureSpace, system: &DyadicSystem, w: &GridFunction) -> Result<f64> {
    check_positive(space, w)?;
    let avg = cube_averages(space, system, w);
    let (k_min, k_max) = (system.k_min(), system.k_max());
    let depth = (k_max - k_min + 1) as usize;
    // below[x][i] = max over cubes R ∋ x with k(R) ≤ k_min + i of (w)_R.
    let below: Vec<Vec<f64>> = (0..space.len())
        .map(|x| {
            let mut row = vec![0.0; depth];
            let mut run: f64 = 0.0;
            for (i, slot) in row.iter_mut().enumerate() {
                if let Some(r) = system.cube_at(x, k_min + i as i32) {
                    run = run.max(avg[r]);
                }
                *slot = run;
            }
            row
        })
        .collect();
    let mut best: f64 = 0.0;
    for q in system.cubes() {
        let i = (q.level - k_min) as usize;
        let num: f64 = q.members.iter().map(|&x| below[x][i] * space.mass(x)).sum();
        let den: f64 = q.members.iter().map(|&x| w[x] * space.mass(x)).sum();
        best = best.max(num / den);
    }
    Ok(best)
}

/// Result of [`reverse_holder_rprime`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReverseHolder {
    /// Largest admissible `r` found (up to the search tolerance).
    pub r: f64,
    /// `r' = r/(r−1)`; `+∞` when even `r = 1 + 10⁻⁶` fails.
    pub r_prime: f64,
    /// The inequality held at the search cap.
    pub capped: bool,
}

pub const RH_R_MIN: f64 = 1.0 + 1e-6;
pub const RH_R_CAP: f64 = 64.0;

/// `log (⨍_Q w^r)^{1/r}` via log-sum-exp.
fn log_power_mean(space: &MetricMeasureSpace, members: &[usize], logw: &[f64], r: f64) -> f64 {
    let top = members.iter().map(|&y| r * logw[y]).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = members.iter().map(|&y| space.mass(y)).sum();
    let s: f64 = members
        .iter()
        .map(|&y| space.mass(y) * (r * logw[y] - top).exp())
        .sum();
    (top + (s / total).ln()) / r
}

/// Largest `r ∈ [1+10⁻⁶, 64]` with `(w^r)_Q^{1/r} ≤ C (w)_Q` on every cube
/// of `cubes`, by bisection in `log(r−1)` to relative tolerance `10⁻⁴` on
/// `r − 1`. The left side increases with `r`, so the admissible set is an
/// interval.
pub fn reverse_holder_rprime(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    cubes: &[CubeId],
    w: &GridFunction,
    c: f64,
) -> Result<ReverseHolder> {
    if !(c > 1.0) {
        return Err(invalid(format!("reverse Hölder constant must exceed 1, got {c}")));
    }
    check_positive(space, w)?;
    let logw: Vec<f64> = w.values().iter().map(|v| v.ln()).collect();
    let bounds: Vec<(&[usize], f64)> = cubes
        .iter()
        .map(|&q| {
            let m = &system.cube(q).members;
            (m.as_slice(), c.ln() + log_power_mean(space, m, &logw, 1.0))
        })
        .collect();
    let holds = |r: f64| {
        bounds
            .iter()
            .all(|&(m, bound)| log_power_mean(space, m, &logw, r) <= bound + 1e-12)
    };
    if !holds(RH_R_MIN) {
        return Ok(ReverseHolder {
            r: 1.0,
            r_prime: f64::INFINITY,
            capped: false,
        });
    }
    if holds(RH_R_CAP) {
        return Ok(ReverseHolder {
            r: RH_R_CAP,
            r_prime: conjugate(RH_R_CAP),
            capped: true,
        });
    }
    let (mut lo, mut hi) = ((RH_R_MIN - 1.0).ln(), (RH_R_CAP - 1.0).ln());
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if holds(1.0 + mid.exp()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 1.0 + lo.exp();
    Ok(ReverseHolder {
        r,
        r_prime: conjugate(r),
        capped: false,
    })
}

/// `w(x) = max(|x|, h/2)^α` with `h` the grid spacing (or the smallest
/// distance for non-grid spaces with coordinates).
pub fn power_weight(space: &MetricMeasureSpace, alpha: f64) -> Result<GridFunction> {
    if !alpha.is_finite() {
        return Err(invalid("power weight exponent must be finite"));
    }
    let h = match space.grid() {
        Some(g) => g.h,
        None => space.min_spacing().unwrap_or(1.0),
    };
    let values = (0..space.len())
        .map(|i| {
            let c = space
                .coords(i)
                .ok_or_else(|| Error::InvalidSpace("power weights need coordinates".into()))?;
            let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(r.max(0.5 * h).powf(alpha))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridFunction(values))
}

/// `sup_λ λ (w{g > λ})^{1/p}` for `g ≥ 0`, evaluated at `λ → g_i⁻`.
pub fn weak_pnorm(space: &MetricMeasureSpace, w: &GridFunction, g: &GridFunction, p: f64) -> Result<f64> {
    check_p(p)?;
    w.check_len(space)?;
    g.check_len(space)?;
    g.check_nonnegative()?;
    Ok(weak_sup(space, g, w, p))
}

/// `max_λ λ^p w{M_D(fσ) > λ} / ([w,σ]_{A_p} ∫ f^p σ)` over realized `λ`.
pub fn muckenhoupt_weak_ratio(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    f: &GridFunction,
    pair: &WeightPair,
) -> Result<f64> {
    f.check_len(space)?;
    f.check_nonnegative()?;
    let ap = two_weight_ap(space, system, &pair.w, &pair.sigma, pair.p)?;
    let norm: f64 = (0..space.len())
        .map(|x| f[x].powf(pair.p) * pair.sigma[x] * space.mass(x))
        .sum();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let m = dyadic_maximal(space, system, &f.zip_with(&pair.sigma, |a, b| a * b))?;
    let lhs = weak_sup(space, &m, &pair.w, pair.p).powf(pair.p);
    Ok(lhs / (ap * norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::CubeSpec;

    fn line(n: usize) -> (MetricMeasureSpace, DyadicSystem) {
        let s = MetricMeasureSpace::euclidean_grid(1, n, 1.0).unwrap();
        let k = (n as f64).log2().ceil() as i32;
        let sys = DyadicSystem::standard_euclidean(&s, 0, k).unwrap();
        (s, sys)
    }

    fn two_leaf() -> (MetricMeasureSpace, DyadicSystem) {
        let s = MetricMeasureSpace::euclidean_grid(1, 2, 1.0).unwrap();
        let specs = vec![
            CubeSpec { level: 1, center: 0, members: vec![0, 1] },
            CubeSpec { level: 0, center: 0, members: vec![0] },
            CubeSpec { level: 0, center: 1, members: vec![1] },
        ];
        let sys = DyadicSystem::from_cubes(&s, 2.0, 2.0, specs).unwrap();
        (s, sys)
    }

    #[test]
    fn ap_trivial_values() {
        let (s, sys) = line(16);
        let one = GridFunction::constant(16, 1.0);
        assert!((two_weight_ap(&s, &sys, &one, &one, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let c = GridFunction::constant(16, 3.5);
        assert!((two_weight_ap(&s, &sys, &c, &one, 3.0).unwrap() - 3.5).abs() < 1e-12);
        assert!((two_weight_ap_balls(&s, &c, &one, 3.0).unwrap() - 3.5).abs() < 1e-12);
        assert!(two_weight_ap(&s, &sys, &GridFunction::zeros(16), &one, 2.0).is_err());
    }

    #[test]
    fn ainfty_values() {
        let (s, sys) = line(16);
        let one = GridFunction::constant(16, 1.0);
        assert!((fujii_wilson_ainfty(&s, &sys, &one).unwrap() - 1.0).abs() < 1e-12);
        let (s, sys) = two_leaf();
        // Root: (w)=2, M(w1_Q) = (2, 3), total 5 over w(Q) = 4.
        let w = GridFunction::new(vec![1.0, 3.0]);
        assert!((fujii_wilson_ainfty(&s, &sys, &w).unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn reverse_holder_two_valued() {
        let (s, sys) = two_leaf();
        let root = sys.top_cubes()[0];
        let one = GridFunction::constant(2, 1.0);
        let rh = reverse_holder_rprime(&s, &sys, &[root], &one, 2.0).unwrap();
        assert!(rh.capped);
        assert!(reverse_holder_rprime(&s, &sys, &[root], &one, 0.5).is_err());
        let k = 50.0;
        let w = GridFunction::new(vec![1.0, k]);
        let rh = reverse_holder_rprime(&s, &sys, &[root], &w, 1.5).unwrap();
        // Independent root of (½(1+K^r))^{1/r} = C·½(1+K) by bracketing on r.
        let g = |r: f64| (0.5 * (1.0 + k.powf(r))).powf(1.0 / r) - 1.5 * 0.5 * (1.0 + k);
        let (mut a, mut b) = (1.0 + 1e-9, 64.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        assert!(((rh.r - 1.0) / (a - 1.0) - 1.0).abs() < 2e-4, "{} vs {a}", rh.r);
        let looser = reverse_holder_rprime(&s, &sys, &[root], &w, 3.0).unwrap();
        assert!(looser.r_prime <= rh.r_prime);
    }

    #[test]
    fn power_weight_values() {
        let (s, _) = line(4);
        assert_eq!(power_weight(&s, 0.0).unwrap(), GridFunction::constant(4, 1.0));
        let w = power_weight(&s, 1.0).unwrap();
        assert_eq!(w[2], 2.0);
        assert_eq!(w[0], 0.5);
        let abstract_space = MetricMeasureSpace::from_distances(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert!(power_weight(&abstract_space, 1.0).is_err());
    }

    #[test]
    fn weak_norm_values() {
        let s = MetricMeasureSpace::euclidean_grid(1, 16, 1.0 / 16.0).unwrap();
        let w = GridFunction::constant(16, 1.0);
        let half: Vec<usize> = (0..8).collect();
        let g = GridFunction::indicator(16, &half);
        assert!((weak_pnorm(&s, &w, &g, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(weak_pnorm(&s, &w, &GridFunction::zeros(16), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn muckenhoupt_bound_on_example() {
        let (s, sys) = line(16);
        let w = GridFunction::new((0..16).map(|i| 1.0 + (i % 5) as f64).collect());
        let pair = WeightPair::dual(&s, w, 2.0).unwrap();
        let f = GridFunction::new((0..16).map(|i| (i % 3) as f64).collect());
        let r = muckenhoupt_weak_ratio(&s, &sys, &f, &pair).unwrap();
        assert!(r > 0.0 && r <= 1.0 + 1e-12);
    }
}
