//! Finite metric measure spaces.
//!
//! A [`MetricMeasureSpace`] is a finite set of atoms with a metric and positive
//! point masses, so every integral is a weighted sum. Balls are open:
//! `B(x,r) = {y : d(x,y) < r}`.
//!
//! Suprema over a continuum of radii are replaced by an enumeration of the
//! *realized* radii: ball membership around a center only changes at the
//! pairwise distances, so the radii `{d, d(1+ε)}` over all pairwise distances
//! `d`, together with a tiny radius selecting the singleton, realize every
//! ball the space has.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative offset used to step just past a realized distance.
pub const RADIUS_OFFSET: f64 = 1e-9;

/// Layout of a space produced by [`MetricMeasureSpace::euclidean_grid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub d: usize,
    pub n: usize,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    dim: usize,
    coords: Option<Vec<f64>>,
    dist: Option<Vec<f64>>,
    mass: Vec<f64>,
    grid: Option<GridInfo>,
}

/// On-disk form of a space: exactly one of `coords` and `dist` is present.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    pub coords: Option<Vec<Vec<f64>>>,
    pub dist: Option<Vec<Vec<f64>>>,
    pub mass: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
}

impl MetricMeasureSpace {
    /// Space from Euclidean coordinates; distances are computed on demand.
    pub fn from_coords(coords: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Self> {
        if coords.len() != mass.len() {
            return Err(Error::InvalidSpace(format!(
                "{} coordinate rows but {} masses",
                coords.len(),
                mass.len()
            )));
        }
        let dim = coords.first().map_or(0, Vec::len);
        if coords.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidSpace("ragged coordinate rows".into()));
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace("non-finite coordinate".into()));
        }
        check_masses(&mass)?;
        Ok(Self {
            dim,
            coords: Some(coords.into_iter().flatten().collect()),
            dist: None,
            mass,
            grid: None,
        })
    }

    /// Space from an explicit distance matrix. The metric axioms, including
    /// the triangle inequality over all triples, are audited here.
    pub fn from_distances(dist: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Self> {
        let n = mass.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpace(format!(
                "distance matrix must be {n}x{n}"
            )));
        }
        check_masses(&mass)?;
        let flat: Vec<f64> = dist.into_iter().flatten().collect();
        let scale = flat.iter().cloned().fold(0.0_f64, f64::max).max(1.0);
        let tol = 1e-12 * scale;
        for i in 0..n {
            if flat[i * n + i] != 0.0 {
                return Err(Error::InvalidSpace(format!("d({i},{i}) != 0")));
            }
            for j in 0..n {
                let d = flat[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) = {d}")));
                }
                if (d - flat[j * n + i]).abs() > tol {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let sum = flat[i * n + j] + flat[j * n + k];
                    let dik = flat[i * n + k];
                    if dik > sum + tol {
                        return Err(Error::TriangleInequality { i, j, k, dik, sum });
                    }
                }
            }
        }
        Ok(Self {
            dim: 0,
            coords: None,
            dist: Some(flat),
            mass,
            grid: None,
        })
    }

    /// `n^d` points at `h·(i₁,…,i_d)` with mass `h^d` each.
    pub fn euclidean_grid(d: usize, n: usize, h: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(invalid(format!("grid dimension must be 1 or 2, got {d}")));
        }
        if n == 0 {
            return Err(invalid("grid needs at least one point per axis"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        let extent = h * n as f64;
        if !extent.is_finite() {
            return Err(invalid("grid extent n·h overflows"));
        }
        let count = n.checked_pow(d as u32).ok_or_else(|| invalid("grid too large"))?;
        let mut coords = Vec::with_capacity(count * d);
        if d == 1 {
            for i in 0..n {
                coords.push(h * i as f64);
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    coords.push(h * i as f64);
                    coords.push(h * j as f64);
                }
            }
        }
        Ok(Self {
            dim: d,
            coords: Some(coords),
            dist: None,
            mass: vec![h.powi(d as i32); count],
            grid: Some(GridInfo { d, n, h }),
        })
    }

    pub fn from_file(file: SpaceFile) -> Result<Self> {
        let grid = file.grid;
        let mut space = match (file.coords, file.dist) {
            (Some(c), None) => Self::from_coords(c, file.mass)?,
            (None, Some(d)) => Self::from_distances(d, file.mass)?,
            _ => {
                return Err(Error::InvalidSpace(
                    "exactly one of \"coords\" and \"dist\" must be present".into(),
                ))
            }
        };
        if let Some(g) = grid {
            let expected = Self::euclidean_grid(g.d, g.n, g.h)?;
            let same = space.len() == expected.len()
                && space.coords.as_deref().is_some_and(|c| {
                    c.iter()
                        .zip(expected.coords.as_deref().unwrap_or(&[]))
                        .all(|(a, b)| (a - b).abs() <= 1e-12 * g.h.max(1.0))
                });
            if !same {
                return Err(Error::InvalidSpace("grid metadata does not match coordinates".into()));
            }
            space.grid = Some(g);
        }
        Ok(space)
    }

    pub fn to_file(&self) -> SpaceFile {
        let n = self.len();
        SpaceFile {
            coords: self
                .coords
                .as_ref()
                .map(|c| c.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()),
            dist: self
                .dist
                .as_ref()
                .map(|d| d.chunks(n.max(1)).map(<[f64]>::to_vec).collect()),
            mass: self.mass.clone(),
            grid: self.grid,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn dim_hint(&self) -> Option<usize> {
        self.coords.as_ref().map(|_| self.dim)
    }

    pub fn grid(&self) -> Option<GridInfo> {
        self.grid
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.coords
            .as_ref()
            .map(|c| &c[i * self.dim..(i + 1) * self.dim])
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match (&self.dist, &self.coords) {
            (Some(d), _) => d[i * self.len() + j],
            (None, Some(c)) => {
                let a = &c[i * self.dim..(i + 1) * self.dim];
                let b = &c[j * self.dim..(j + 1) * self.dim];
                if self.dim == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                }
            }
            (None, None) => unreachable!("space without metric"),
        }
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn measure(&self, points: &[usize]) -> f64 {
        points.iter().map(|&i| self.mass[i]).sum()
    }

    pub fn diameter(&self) -> f64 {
        if let Some(g) = self.grid {
            return g.h * (g.n - 1) as f64 * (g.d as f64).sqrt();
        }
        let n = self.len();
        let mut diam = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                diam = diam.max(self.dist(i, j));
            }
        }
        diam
    }

    /// Smallest positive pairwise distance, if any.
    pub fn min_spacing(&self) -> Option<f64> {
        if let Some(g) = self.grid {
            return (g.n > 1).then_some(g.h);
        }
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::PointOutOfRange(x))
        }
    }

    /// Open ball `B(x,r)`; members are sorted by point id.
    pub fn ball(&self, x: usize, r: f64) -> Result<Ball> {
        self.check_point(x)?;
        if !(r > 0.0) {
            return Err(invalid(format!("ball radius must be positive, got {r}")));
        }
        Ok(Ball {
            center: x,
            radius: r,
            members: self.ball_members(x, r),
        })
    }

    pub(crate) fn ball_members(&self, x: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.dist(x, y) < r).collect()
    }

    pub fn ball_measure(&self, x: usize, r: f64) -> f64 {
        (0..self.len())
            .filter(|&y| self.dist(x, y) < r)
            .map(|y| self.mass[y])
            .sum()
    }

    /// Points ordered by distance from `x` (ties by point id).
    pub(crate) fn sorted_from(&self, x: usize) -> Vec<(f64, usize)> {
        let mut order: Vec<(f64, usize)> = (0..self.len()).map(|y| (self.dist(x, y), y)).collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        order
    }

    /// The realized radius set: a tiny radius (singletons), every positive
    /// pairwise distance `d` and `d(1+ε)`. Sorted and deduplicated.
    pub fn realized_radii(&self) -> Vec<f64> {
        let n = self.len();
        let mut ds = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                if d > 0.0 {
                    ds.push(d);
                }
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        ds.dedup();
        let tiny = ds.first().map_or(1.0, |d| d * RADIUS_OFFSET);
        let mut radii = Vec::with_capacity(2 * ds.len() + 1);
        radii.push(tiny);
        for d in ds {
            radii.push(d);
            radii.push(d * (1.0 + RADIUS_OFFSET));
        }
        radii
    }

    /// `max μ(B(x,2r))/μ(B(x,r))` over all centers and realized radii.
    pub fn doubling_constant(&self) -> f64 {
        self.doubling_constant_with(&[])
    }

    /// As [`doubling_constant`](Self::doubling_constant), with extra (scale) radii
    /// added to the enumeration.
    pub fn doubling_constant_with(&self, extra_radii: &[f64]) -> f64 {
        let mut radii = self.realized_radii();
        radii.extend(extra_radii.iter().copied().filter(|r| *r > 0.0));
        self.max_growth(2.0, &radii)
    }

    /// `γ = max μ(B(x,βr))/μ(B(x,r))` over all centers and `r ∈ radii`.
    pub fn aperture_gamma(&self, beta: f64, radii: &[f64]) -> Result<f64> {
        if !(beta >= 1.0) {
            return Err(invalid(format!("aperture must be >= 1, got {beta}")));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("radii must be a nonempty set of positive reals"));
        }
        if beta == 1.0 {
            return Ok(1.0);
        }
        Ok(self.max_growth(beta, radii))
    }

    fn max_growth(&self, factor: f64, radii: &[f64]) -> f64 {
        let mut best = 1.0_f64;
        for x in 0..self.len() {
            let prof = BallProfile::new(self, x);
            for &r in radii {
                let inner = prof.measure_below(r);
                if inner > 0.0 {
                    best = best.max(prof.measure_below(factor * r) / inner);
                }
            }
        }
        best
    }

    /// Largest `ε ≥ 0` with `μ(B(x,Cr)) ≥ (1+ε)μ(B(x,r))` for every center and
    /// `r ∈ radii` such that `B(x,Cr) ≠ X`. Returns 0 if no pair is admissible.
    pub fn reverse_doubling_epsilon(&self, c: f64, radii: &[f64]) -> Result<f64> {
        if !(c > 1.0) {
            return Err(invalid(format!("reverse doubling factor must exceed 1, got {c}")));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("radii must be a nonempty set of positive reals"));
        }
        let n = self.len();
        let mut worst = f64::INFINITY;
        for x in 0..n {
            let prof = BallProfile::new(self, x);
            for &r in radii {
                if prof.count_below(c * r) == n {
                    continue;
                }
                let ratio = prof.measure_below(c * r) / prof.measure_below(r);
                worst = worst.min(ratio);
            }
        }
        if worst.is_finite() {
            Ok((worst - 1.0).max(0.0))
        } else {
            Ok(0.0)
        }
    }

    /// Uncentered Hardy–Littlewood maximal function over every ball the space
    /// realizes: `Mv(x) = max_{B ∋ x} (1/μ(B)) Σ_{y∈B} v(y)μ(y)`.
    pub fn uncentered_maximal(&self, v: &GridFunction) -> Result<GridFunction> {
        v.check_len(self)?;
        v.check_nonnegative()?;
        let n = self.len();
        let mut out = vec![0.0_f64; n];
        for z in 0..n {
            let order = self.sorted_from(z);
            // Balls around z are prefixes closed under ties in distance.
            let mut avgs = Vec::with_capacity(n);
            let mut group_end = Vec::with_capacity(n);
            let (mut mass, mut weighted) = (0.0, 0.0);
            let mut i = 0;
            while i < n {
                let d = order[i].0;
                let mut j = i;
                while j < n && order[j].0 == d {
                    let y = order[j].1;
                    mass += self.mass[y];
                    weighted += v.0[y] * self.mass[y];
                    j += 1;
                }
                avgs.push(weighted / mass);
                group_end.push(j);
                i = j;
            }
            // A point in group g lies in every prefix ending at group >= g.
            let mut suffix_max = f64::NEG_INFINITY;
            let mut start = n;
            for g in (0..avgs.len()).rev() {
                suffix_max = suffix_max.max(avgs[g]);
                let begin = if g == 0 { 0 } else { group_end[g - 1] };
                for &(_, y) in &order[begin..start] {
                    if suffix_max > out[y] {
                        out[y] = suffix_max;
                    }
                }
                start = begin;
            }
        }
        Ok(GridFunction(out))
    }
}

fn check_masses(mass: &[f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidSpace("space must have at least one point".into()));
    }
    if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::InvalidSpace(format!("mass({i}) = {m} must be positive and finite")));
    }
    Ok(())
}

/// Distances from one center sorted, with cumulative masses, for fast ball
/// measures.
pub(crate) struct BallProfile {
    dists: Vec<f64>,
    cum: Vec<f64>,
}

impl BallProfile {
    pub(crate) fn new(space: &MetricMeasureSpace, x: usize) -> Self {
        let order = space.sorted_from(x);
        let mut cum = Vec::with_capacity(order.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for &(_, y) in &order {
            acc += space.mass(y);
            cum.push(acc);
        }
        Self {
            dists: order.into_iter().map(|(d, _)| d).collect(),
            cum,
        }
    }

    pub(crate) fn count_below(&self, r: f64) -> usize {
        self.dists.partition_point(|&d| d < r)
    }

    pub(crate) fn measure_below(&self, r: f64) -> f64 {
        self.cum[self.count_below(r)]
    }
}

/// Open ball with its member list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

impl Ball {
    pub fn measure(&self, space: &MetricMeasureSpace) -> f64 {
        space.measure(&self.members)
    }

    pub fn contains(&self, y: usize) -> bool {
        self.members.binary_search(&y).is_ok()
    }
}

/// A real value per point, aligned with the owning space's point order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        for &i in set {
            v[i] = 1.0;
        }
        Self(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_len(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.0.len() == space.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: space.len(),
                got: self.0.len(),
            })
        }
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        match self.0.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            Some((point, &value)) => Err(Error::NegativeValue { point, value }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    /// `Σ v(y) μ(y)`.
    pub fn integral(&self, space: &MetricMeasureSpace) -> f64 {
        self.0.iter().zip(space.masses()).map(|(v, m)| v * m).sum()
    }

    /// `(1/μ(S)) Σ_{y∈S} v(y)μ(y)`.
    pub fn average_over(&self, space: &MetricMeasureSpace, set: &[usize]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for &y in set {
            num += self.0[y] * space.mass(y);
            den += space.mass(y);
        }
        num / den
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl std::ops::Index<usize> for GridFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize) -> MetricMeasureSpace {
        MetricMeasureSpace::euclidean_grid(1, n, 1.0).unwrap()
    }

    #[test]
    fn grid_construction() {
        let s = grid1(2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.masses(), &[1.0, 1.0]);
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(grid1(8).total_mass(), 8.0);
        let s2 = MetricMeasureSpace::euclidean_grid(2, 3, 0.5).unwrap();
        assert_eq!(s2.len(), 9);
        assert!(s2.masses().iter().all(|&m| m == 0.25));
        assert!((s2.dist(0, 8) - (0.5f64.powi(2) * 8.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_dimension() {
        assert!(MetricMeasureSpace::euclidean_grid(3, 2, 1.0).is_err());
        assert!(MetricMeasureSpace::euclidean_grid(0, 2, 1.0).is_err());
        assert!(MetricMeasureSpace::euclidean_grid(1, 4, f64::MAX).is_err());
    }

    #[test]
    fn open_balls() {
        let s = grid1(8);
        let b = s.ball(0, 2.0).unwrap();
        assert_eq!(b.members, vec![0, 1]);
        assert_eq!(b.measure(&s), 2.0);
        let b = s.ball(3, 1.0).unwrap();
        assert_eq!(b.members, vec![3]);
        let b = s.ball(3, 2.0).unwrap();
        assert_eq!(b.members, vec![2, 3, 4]);
        assert_eq!(b.measure(&s), 3.0);
        assert!(s.ball(3, 0.0).is_err());
        assert!(s.ball(9, 1.0).is_err());
    }

    #[test]
    fn doubling_examples() {
        assert_eq!(grid1(8).doubling_constant(), 3.0);
        assert_eq!(grid1(2).doubling_constant(), 2.0);
        assert_eq!(grid1(1).doubling_constant(), 1.0);
    }

    #[test]
    fn gamma_examples() {
        let s = grid1(256);
        assert_eq!(s.aperture_gamma(1.0, &[4.0, 8.0]).unwrap(), 1.0);
        let g = s.aperture_gamma(4.0, &[4.0, 8.0, 16.0]).unwrap();
        assert!((2.0..=8.0).contains(&g), "gamma = {g}");
        // two points at distance 1: B(x,0.5) = {x}, B(x,4) = both.
        let two = grid1(2);
        assert_eq!(two.aperture_gamma(8.0, &[0.5]).unwrap(), 2.0);
    }

    #[test]
    fn reverse_doubling_examples() {
        assert_eq!(grid1(1).reverse_doubling_epsilon(4.0, &[1.0]).unwrap(), 0.0);
        let eps = grid1(256).reverse_doubling_epsilon(4.0, &[2.0, 4.0, 8.0]).unwrap();
        assert!(eps >= 1.0, "eps = {eps}");
        assert!(grid1(4).reverse_doubling_epsilon(1.0, &[1.0]).is_err());
    }

    #[test]
    fn maximal_function_examples() {
        let s = grid1(2);
        let m = s.uncentered_maximal(&GridFunction::new(vec![1.0, 0.0])).unwrap();
        assert_eq!(m.0, vec![1.0, 0.5]);
        let s = grid1(6);
        assert_eq!(s.uncentered_maximal(&GridFunction::constant(6, 1.0)).unwrap().0, vec![1.0; 6]);
        assert_eq!(s.uncentered_maximal(&GridFunction::zeros(6)).unwrap().0, vec![0.0; 6]);
        assert!(matches!(
            s.uncentered_maximal(&GridFunction::new(vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0])),
            Err(Error::NegativeValue { point: 1, .. })
        ));
    }

    #[test]
    fn maximal_matches_brute_force() {
        let s = MetricMeasureSpace::from_coords(
            vec![vec![0.0], vec![0.3], vec![1.7], vec![2.0], vec![4.5]],
            vec![1.0, 0.5, 2.0, 1.0, 0.25],
        )
        .unwrap();
        let v = GridFunction::new(vec![0.2, 3.0, 0.0, 1.0, 5.0]);
        let m = s.uncentered_maximal(&v).unwrap();
        for x in 0..s.len() {
            let mut best = 0.0_f64;
            for z in 0..s.len() {
                for r in s.realized_radii() {
                    let b = s.ball(z, r).unwrap();
                    if b.contains(x) {
                        best = best.max(v.average_over(&s, &b.members));
                    }
                }
            }
            assert!((m[x] - best).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_inequality_is_enforced() {
        let bad = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let err = MetricMeasureSpace::from_distances(bad, vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::TriangleInequality { .. }));
        assert!(MetricMeasureSpace::from_distances(vec![vec![0.0]], vec![0.0]).is_err());
    }

    #[test]
    fn file_roundtrip_keeps_grid() {
        let s = MetricMeasureSpace::euclidean_grid(2, 3, 0.5).unwrap();
        let json = serde_json::to_string(&s.to_file()).unwrap();
        let back = MetricMeasureSpace::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.grid(), s.grid());
        assert_eq!(back.dist(1, 7), s.dist(1, 7));
        let both = r#"{"coords": [[0.0]], "dist": [[0.0]], "mass": [1.0]}"#;
        assert!(MetricMeasureSpace::from_file(serde_json::from_str(both).unwrap()).is_err());
    }
}
