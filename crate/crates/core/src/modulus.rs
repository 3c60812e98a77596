//! Moduli of continuity and their Dini / log-Dini functionals.
//!
//! A modulus is nondecreasing with `ω(0) = 0`. Subadditivity
//! (`u ≤ t + s ⟹ ω(u) ≤ ω(t) + ω(s)`) is *certified* on a grid rather than
//! assumed, because tabulated moduli may violate it.

use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of dyadic blocks `[2^{-j-1}, 2^{-j}]` covering `[2^{-60}, 1]`.
const DINI_BLOCKS: usize = 60;
const SUM_TERM_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Kind {
    Power { alpha: f64 },
    Table { knots: Vec<f64>, values: Vec<f64> },
    Scaled { base: Box<Modulus>, factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Modulus {
    kind: Kind,
}

#[derive(Clone, Debug, Deserialize)]
struct TableFile {
    knots: Vec<f64>,
    values: Vec<f64>,
}

/// Outcome of [`Modulus::certify_subadditive`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Subadditivity {
    Pass,
    /// Worst violating grid triple: `ω(u) > ω(t) + ω(s)` with `u ≤ t + s`.
    Fail { t: f64, s: f64, u: f64, excess: f64 },
}

impl Subadditivity {
    pub fn passed(&self) -> bool {
        matches!(self, Subadditivity::Pass)
    }
}

impl Modulus {
    /// `ω(t) = t^α` with `0 < α ≤ 1`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidModulus(format!(
                "power exponent must lie in (0,1], got {alpha}"
            )));
        }
        Ok(Self {
            kind: Kind::Power { alpha },
        })
    }

    /// Piecewise-linear modulus through `(knots[i], values[i])`, constant beyond
    /// the last knot. A knot at 0 must carry the value 0; if the first knot is
    /// positive, `(0, 0)` is prepended implicitly.
    pub fn table(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidModulus(
                "table needs equally many (>= 1) knots and values".into(),
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModulus("non-finite table entry".into()));
        }
        if knots[0] < 0.0 {
            return Err(Error::InvalidModulus("knots must be non-negative".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModulus("knots must be strictly increasing".into()));
        }
        if values[0] < 0.0 || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidModulus(
                "values must be non-negative and nondecreasing".into(),
            ));
        }
        let (knots, values) = if knots[0] == 0.0 {
            if values[0] != 0.0 {
                return Err(Error::InvalidModulus("a modulus must vanish at 0".into()));
            }
            (knots, values)
        } else {
            (
                std::iter::once(0.0).chain(knots).collect(),
                std::iter::once(0.0).chain(values).collect(),
            )
        };
        Ok(Self {
            kind: Kind::Table { knots, values },
        })
    }

    /// `c·ω` for `c > 0`.
    pub fn scaled(base: Modulus, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidModulus(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            kind: Kind::Scaled {
                base: Box::new(base),
                factor,
            },
        })
    }

    /// The zero modulus.
    pub fn zero() -> Self {
        Self {
            kind: Kind::Table {
                knots: vec![0.0, 1.0],
                values: vec![0.0, 0.0],
            },
        }
    }

    /// Parses `power:<α>`, `table:<path.json>` or `scale:<c>:<spec>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidModulus(format!("cannot parse modulus spec {spec:?}"));
        let (head, rest) = spec.split_once(':').ok_or_else(bad)?;
        match head {
            "power" => Self::power(rest.trim().parse().map_err(|_| bad())?),
            "table" => Self::load_table(rest),
            "scale" => {
                let (c, inner) = rest.split_once(':').ok_or_else(bad)?;
                Self::scaled(Self::parse(inner)?, c.trim().parse().map_err(|_| bad())?)
            }
            "zero" => Ok(Self::zero()),
            _ => Err(bad()),
        }
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let table: TableFile = serde_json::from_str(&text)?;
        Self::table(table.knots, table.values)
    }

    /// `ω(t)`; negative arguments are rejected.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus argument must be non-negative, got {t}"
            )));
        }
        Ok(self.at(t))
    }

    /// `ω(t)` for `t ≥ 0` (unchecked).
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match &self.kind {
            Kind::Power { alpha } => {
                if *alpha == 1.0 {
                    t
                } else if t == 0.0 {
                    0.0
                } else {
                    t.powf(*alpha)
                }
            }
            Kind::Table { knots, values } => {
                let last = knots.len() - 1;
                if t >= knots[last] {
                    return values[last];
                }
                let i = knots.partition_point(|&k| k <= t);
                let (k0, k1) = (knots[i - 1], knots[i]);
                let (v0, v1) = (values[i - 1], values[i]);
                v0 + (v1 - v0) * (t - k0) / (k1 - k0)
            }
            Kind::Scaled { base, factor } => factor * base.at(t),
        }
    }

    /// True when `ω(t) = c·t` for some `c`, so the modulus is itself a
    /// multiple of the metric.
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            Kind::Power { alpha } => *alpha == 1.0,
            Kind::Scaled { base, .. } => base.is_linear(),
            Kind::Table { .. } => false,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Power { .. } => Vec::new(),
            Kind::Table { knots, .. } => knots.clone(),
            Kind::Scaled { base, .. } => base.breakpoints(),
        }
    }

    fn natural_range(&self) -> f64 {
        match &self.kind {
            Kind::Power { .. } => 2.0,
            Kind::Table { knots, .. } => 2.0 * knots[knots.len() - 1].max(1.0),
            Kind::Scaled { base, .. } => base.natural_range(),
        }
    }

    /// Checks `ω(u) ≤ ω(t) + ω(s)` for all grid triples with `u ≤ t + s` on a
    /// uniform grid of `grid_size` points over `[0, T]` (`T = 2` for power
    /// moduli, twice the last knot for tables). Monotonicity reduces the check
    /// to the largest admissible `u` per pair; on failure the triple with the
    /// largest excess is returned.
    pub fn certify_subadditive(&self, grid_size: usize) -> Result<Subadditivity> {
        if grid_size < 2 {
            return Err(Error::InvalidParameter("grid_size must be at least 2".into()));
        }
        let top = self.natural_range();
        let step = top / (grid_size - 1) as f64;
        let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 * step).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| self.at(t)).collect();
        let tol = 1e-12 * vals.last().copied().unwrap_or(0.0).max(1.0);
        let mut worst: Option<(f64, f64, f64, f64)> = None;
        for i in 0..grid_size {
            for j in i..grid_size {
                // u = t + s lands on grid index i + j, clamped to the grid.
                let k = (i + j).min(grid_size - 1);
                let excess = vals[k] - vals[i] - vals[j];
                if excess > tol && worst.is_none_or(|w| excess > w.3) {
                    worst = Some((grid[i], grid[j], grid[k], excess));
                }
            }
        }
        Ok(match worst {
            None => Subadditivity::Pass,
            Some((t, s, u, excess)) => Subadditivity::Fail { t, s, u, excess },
        })
    }

    /// `∫₀¹ ω(t) dt/t`, or `+∞` if divergence is detected.
    pub fn dini_norm(&self, quadrature_points: usize) -> Result<f64> {
        self.dini_quadrature(quadrature_points, false)
    }

    /// `∫₀¹ ω(t) |log t| dt/t`, or `+∞` if divergence is detected.
    pub fn log_dini_norm(&self, quadrature_points: usize) -> Result<f64> {
        self.dini_quadrature(quadrature_points, true)
    }

    /// Substituting `t = e^u`, the integral becomes `∫ ω(e^u) w(u) du` over
    /// `u ∈ [-60 ln 2, 0]`, split into the 60 dyadic blocks (further split at
    /// table knots) with Gauss–Legendre on each piece. The omitted `[0, 2^{-60}]`
    /// is estimated from a power-law fit of ω over the last octave; if ω does
    /// not decay there the integral is reported as divergent.
    fn dini_quadrature(&self, points: usize, log_weight: bool) -> Result<f64> {
        if points < 16 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least 16 points per block".into(),
            ));
        }
        let (nodes, weights) = gauss_legendre(points);
        let knot_logs: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|&k| k > 0.0 && k < 1.0)
            .map(f64::ln)
            .collect();
        let mut blocks = Vec::with_capacity(DINI_BLOCKS);
        for j in 0..DINI_BLOCKS {
            let hi = -(j as f64) * LN_2;
            let lo = -((j + 1) as f64) * LN_2;
            let mut cuts = vec![lo];
            cuts.extend(knot_logs.iter().copied().filter(|&u| u > lo && u < hi));
            cuts.push(hi);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut block = 0.0;
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                for (x, wt) in nodes.iter().zip(&weights) {
                    let u = mid + half * x;
                    let weight = if log_weight { -u } else { 1.0 };
                    block += wt * half * self.at(u.exp()) * weight;
                }
            }
            blocks.push(block);
        }
        let total: f64 = blocks.iter().sum();
        // Tail on [0, t0]: fit ω(t) ≈ ω(t0)(t/t0)^a from the last octave.
        let t0 = (-(DINI_BLOCKS as f64) * LN_2).exp();
        let (w0, w1) = (self.at(t0), self.at(2.0 * t0));
        if w0 <= 0.0 {
            return Ok(total);
        }
        let a = (w1 / w0).log2();
        if !(a > 1e-3) {
            return Ok(f64::INFINITY);
        }
        let tail = if log_weight {
            w0 * (-t0.ln() / a + 1.0 / (a * a))
        } else {
            w0 / a
        };
        Ok(total + tail)
    }

    /// `Σ_{k≥0} ω(κ^{-k})`.
    pub fn dini_sum(&self, kappa: f64) -> Result<f64> {
        self.scale_sum(kappa, false)
    }

    /// `Σ_{k≥0} (k+1) ω(κ^{-k})`.
    pub fn log_dini_sum(&self, kappa: f64) -> Result<f64> {
        self.scale_sum(kappa, true)
    }

    fn scale_sum(&self, kappa: f64, log_weight: bool) -> Result<f64> {
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must exceed 1, got {kappa}")));
        }
        let mut total = 0.0;
        for k in 0..SUM_TERM_CAP {
            let weight = if log_weight { (k + 1) as f64 } else { 1.0 };
            let term = weight * self.at(kappa.powi(-(k as i32)));
            total += term;
            if term <= 1e-15 * total {
                return Ok(total);
            }
        }
        Ok(f64::INFINITY)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
