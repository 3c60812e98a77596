//! Whitney decompositions of point sets and the Calderón–Zygmund split
//! `f = g + Σ_Q b_Q` at height `λ`.

use serde::Serialize;

use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{invalid, Error, Result};
use crate::space::{GridFunction, MetricMeasureSpace};
use crate::squarefn::scale_radii;

/// Diameter (largest member distance) of a cube.
pub fn cube_diameter(space: &MetricMeasureSpace, members: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (a, &y) in members.iter().enumerate() {
        for &z in &members[a + 1..] {
            d = d.max(space.dist(y, z));
        }
    }
    d
}

/// `min_{z∉Ω} d(y,z)` for every point; `+∞` when `Ω = X`.
fn distance_to_complement(space: &MetricMeasureSpace, inside: &[bool]) -> Vec<f64> {
    let n = space.len();
    let outside: Vec<usize> = (0..n).filter(|&z| !inside[z]).collect();
    (0..n)
        .map(|y| outside.iter().map(|&z| space.dist(y, z)).fold(f64::INFINITY, f64::min))
        .collect()
}

fn membership(space: &MetricMeasureSpace, set: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; space.len()];
    for &y in set {
        space.check_point(y)?;
        inside[y] = true;
    }
    if inside.iter().all(|&b| b) {
        return Err(Error::WhitneyFullSpace);
    }
    Ok(inside)
}

/// Maximal cubes `Q ⊆ Ω` with `Cw·β·diam(Q) ≤ dist(Q, X∖Ω)`, found top-down.
pub fn whitney(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    omega: &[usize],
    beta: f64,
    cw: f64,
) -> Result<Vec<CubeId>> {
    if !(beta >= 1.0) {
        return Err(invalid(format!("beta must be >= 1, got {beta}")));
    }
    if !(cw > 0.0) {
        return Err(invalid(format!("Whitney constant must be positive, got {cw}")));
    }
    let inside = membership(space, omega)?;
    let dc = distance_to_complement(space, &inside);
    let mut out = Vec::new();
    let mut stack: Vec<CubeId> = system.top_cubes().iter().rev().copied().collect();
    while let Some(id) = stack.pop() {
        let q = system.cube(id);
        if !q.members.iter().any(|&y| inside[y]) {
            continue;
        }
        if q.members.iter().all(|&y| inside[y]) {
            let dist = q.members.iter().map(|&y| dc[y]).fold(f64::INFINITY, f64::min);
            if cw * beta * cube_diameter(space, &q.members) <= dist {
                out.push(id);
                continue;
            }
        }
        stack.extend(q.children.iter().rev().copied());
    }
    Ok(out)
}

/// A bad part `b_Q = 1_Q (f − (f)_Q)`, stored on the members of `Q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BadPart {
    pub cube: CubeId,
    pub members: Vec<usize>,
    pub values: Vec<f64>,
}

impl BadPart {
    pub fn to_function(&self, n: usize) -> GridFunction {
        let mut v = vec![0.0; n];
        for (&y, &b) in self.members.iter().zip(&self.values) {
            v[y] = b;
        }
        GridFunction(v)
    }

    /// `Σ_y b_Q(y) μ(y)`.
    pub fn integral(&self, space: &MetricMeasureSpace) -> f64 {
        self.members.iter().zip(&self.values).map(|(&y, b)| b * space.mass(y)).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub beta: f64,
    pub whitney_constant: f64,
    pub gamma: f64,
    /// `{M|f| > γ^{-1/2} λ}`, sorted.
    pub omega: Vec<usize>,
    pub whitney: Vec<CubeId>,
    pub good: GridFunction,
    pub bad: Vec<BadPart>,
    /// Points of `Ω` not covered by any Whitney cube (kept in `g`).
    pub uncovered: Vec<usize>,
    /// `sup|g| / (γ^{1/2} λ)`.
    pub good_constant: f64,
    /// `max_Q ∫|b_Q| / (γ^{1/2} λ μ(Q))`, 0 without bad parts.
    pub bad_constant: f64,
    /// Whitney cubes whose dilate `B(c_Q, Cw·β·C₁κ^{k(Q)})` leaves `Ω`.
    pub dilate_escapes: Vec<CubeId>,
}

impl CzDecomposition {
    /// `g + Σ_Q b_Q`.
    pub fn reconstruct(&self) -> GridFunction {
        let mut v = self.good.0.clone();
        for b in &self.bad {
            for (&y, &val) in b.members.iter().zip(&b.values) {
                v[y] += val;
            }
        }
        GridFunction(v)
    }
}

pub fn cz_decompose(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    f: &GridFunction,
    lambda: f64,
    beta: f64,
    cw: f64,
) -> Result<CzDecomposition> {
    f.check_len(space)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let radii = scale_radii(system.kappa(), system.k_min(), system.k_max());
    let gamma = space.aperture_gamma(beta, &radii)?;
    let height = lambda / gamma.sqrt();
    let mf = space.uncentered_maximal(&f.map(f64::abs))?;
    let omega: Vec<usize> = (0..space.len()).filter(|&x| mf[x] > height).collect();
    let whitney_cubes = if omega.is_empty() {
        Vec::new()
    } else {
        whitney(space, system, &omega, beta, cw)?
    };
    let inside = {
        let mut v = vec![false; space.len()];
        omega.iter().for_each(|&y| v[y] = true);
        v
    };
    let mut good = f.clone();
    let mut covered = vec![false; space.len()];
    let mut bad = Vec::with_capacity(whitney_cubes.len());
    let scale = gamma.sqrt() * lambda;
    let mut bad_constant: f64 = 0.0;
    let mut dilate_escapes = Vec::new();
    for &id in &whitney_cubes {
        let q = system.cube(id);
        let mean = f.average_over(space, &q.members);
        let values: Vec<f64> = q.members.iter().map(|&y| f[y] - mean).collect();
        for &y in &q.members {
            good.0[y] = mean;
            covered[y] = true;
        }
        let l1: f64 = q.members.iter().zip(&values).map(|(&y, b)| b.abs() * space.mass(y)).sum();
        bad_constant = bad_constant.max(l1 / (scale * q.measure));
        let dilate = system.dilate_members(space, id, cw * beta);
        if dilate.iter().any(|&y| !inside[y]) {
            dilate_escapes.push(id);
        }
        bad.push(BadPart {
            cube: id,
            members: q.members.clone(),
            values,
        });
    }
    let uncovered: Vec<usize> = omega.iter().copied().filter(|&y| !covered[y]).collect();
    let good_constant = good.values().iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
    Ok(CzDecomposition {
        lambda,
        beta,
        whitney_constant: cw,
        gamma,
        omega,
        whitney: whitney_cubes,
        good,
        bad,
        uncovered,
        good_constant,
        bad_constant,
        dilate_escapes,
    })
}

/// Direct recheck of the Whitney condition for each cube; returns offenders.
pub fn whitney_violations(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    omega: &[usize],
    cubes: &[CubeId],
    beta: f64,
    cw: f64,
) -> Result<Vec<CubeId>> {
    let inside = membership(space, omega)?;
    let dc = distance_to_complement(space, &inside);
    Ok(cubes
        .iter()
        .copied()
        .filter(|&id| {
            let q = system.cube(id);
            let contained = q.members.iter().all(|&y| inside[y]);
            let dist = q.members.iter().map(|&y| dc[y]).fold(f64::INFINITY, f64::min);
            !contained || cw * beta * cube_diameter(space, &q.members) > dist
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> (MetricMeasureSpace, DyadicSystem) {
        let s = MetricMeasureSpace::euclidean_grid(1, n, 1.0).unwrap();
        let top = (n as f64).log2().ceil() as i32;
        let sys = DyadicSystem::standard_euclidean(&s, 0, top).unwrap();
        (s, sys)
    }

    #[test]
    fn empty_and_full() {
        let (s, sys) = line(8);
        assert!(whitney(&s, &sys, &[], 1.0, 1.0).unwrap().is_empty());
        let all: Vec<usize> = (0..8).collect();
        assert!(matches!(whitney(&s, &sys, &all, 1.0, 1.0), Err(Error::WhitneyFullSpace)));
    }

    #[test]
    fn isolated_point() {
        let s = MetricMeasureSpace::from_coords(
            vec![vec![0.0], vec![1.0], vec![10.0]],
            vec![1.0; 3],
        )
        .unwrap();
        let seeds = [0, 1, 2];
        let sys = DyadicSystem::build(&s, 2.0, -1, 4, &seeds).unwrap();
        let cubes = whitney(&s, &sys, &[2], 1.0, 1.0).unwrap();
        assert_eq!(cubes.len(), 1);
        assert_eq!(sys.cube(cubes[0]).members, vec![2]);
    }

    #[test]
    fn left_half_shrinks_toward_boundary() {
        let (s, sys) = line(64);
        let omega: Vec<usize> = (0..32).collect();
        let cubes = whitney(&s, &sys, &omega, 1.0, 1.0).unwrap();
        let mut by_start: Vec<(usize, usize)> = cubes
            .iter()
            .map(|&id| (sys.cube(id).members[0], sys.cube(id).members.len()))
            .collect();
        by_start.sort();
        // Every point of Ω is covered exactly once.
        assert_eq!(by_start.iter().map(|c| c.1).sum::<usize>(), 32);
        // [0,16) has diameter 15 and distance 17 to 32; halving continues
        // until {30,31} (diameter 1, distance 1).
        let sizes: Vec<usize> = by_start.iter().map(|c| c.1).collect();
        assert_eq!(sizes, vec![16, 8, 4, 2, 2]);
        assert_eq!(by_start.last().map(|c| c.0 + c.1), Some(32));
        assert!(whitney_violations(&s, &sys, &omega, &cubes, 1.0, 1.0).unwrap().is_empty());
    }

    #[test]
    fn below_threshold_is_untouched() {
        let (s, sys) = line(16);
        let f = GridFunction::new((0..16).map(|i| (i % 3) as f64 * 0.1).collect());
        let cz = cz_decompose(&s, &sys, &f, 10.0, 1.0, 1.0).unwrap();
        assert!(cz.omega.is_empty() && cz.bad.is_empty());
        assert_eq!(cz.good, f);
    }

    #[test]
    fn spike_has_mean_zero_bad_parts() {
        let (s, sys) = line(64);
        let mut f = vec![0.0; 64];
        f[40] = 100.0;
        let f = GridFunction::new(f);
        let cz = cz_decompose(&s, &sys, &f, 20.0, 1.0, 1.0).unwrap();
        assert!(cz.omega.contains(&40));
        assert!(!cz.bad.is_empty());
        for b in &cz.bad {
            assert!(b.integral(&s).abs() < 1e-12);
        }
        let r = cz.reconstruct();
        for x in 0..64 {
            assert!((r[x] - f[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_of_cube() {
        let (s, sys) = line(32);
        let q0 = sys.cube_at(8, 3).unwrap();
        let f = GridFunction::indicator(32, &sys.cube(q0).members);
        let cz = cz_decompose(&s, &sys, &f, 0.9, 1.0, 1.0).unwrap();
        for b in &cz.bad {
            let g = cz.good[b.members[0]];
            assert!(b.members.iter().all(|&y| cz.good[y] == g));
        }
        let r = cz.reconstruct();
        assert!((0..32).all(|x| (r[x] - f[x]).abs() < 1e-12));
    }
}
