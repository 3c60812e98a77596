//! Revised simplex on the dual of the test-class program.
//!
//! The primal program over a ball of `m` points is
//!
//! ```text
//! maximize c·ψ  subject to  |ψ_i| ≤ u_i,  ψ_i − ψ_j ≤ L_ij,  w·ψ = 0.
//! ```
//!
//! Its dual is a transshipment problem with one extra free column:
//!
//! ```text
//! minimize Σ L_ij F_ij + Σ u_i (G⁺_i + G⁻_i)
//! subject to Σ_j (F_ij − F_ji) + G⁺_i − G⁻_i + λ w_i = c_i,   F, G ≥ 0.
//! ```
//!
//! The basis is `m × m` regardless of how many pair constraints exist, and the
//! slack basis `G^{sign c}` is feasible from the start. Pricing scans every
//! pair that can bind, so the duals `π` of the optimal basis are a primal
//! optimum `ψ` that satisfies all pair constraints. Pairs implied by the caps
//! or by shorter paths are never priced.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_STREAK: usize = 50;
const RESIDUAL_TOL: f64 = 1e-11;
/// Size of the right-hand-side perturbation that breaks degenerate ties.
/// The returned `ψ` stays feasible, so the value loses at most
/// `PERTURBATION · 2 Σ u_i` against the exact optimum.
const PERTURBATION: f64 = 1e-10;

pub(crate) struct Program<'a> {
    /// Objective `c`, one entry per ball point.
    pub cost: &'a [f64],
    /// Caps `u_i ≥ 0`.
    pub cap: &'a [f64],
    /// Mean-zero weights `w_i > 0`.
    pub weight: &'a [f64],
    /// Row-major symmetric `m × m` pair bounds `L_ij ≥ 0`.
    pub lip: &'a [f64],
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub psi: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Col {
    /// The free multiplier of the mean-zero row.
    Shift,
    Up(usize),
    Down(usize),
    /// Flow `i → j`, column `e_i − e_j`.
    Pair(usize, usize),
}

struct Dual<'a> {
    p: &'a Program<'a>,
    m: usize,
    tol: f64,
    basis: Vec<Col>,
    /// Row-major `m × m` basis inverse.
    binv: Vec<f64>,
    x: Vec<f64>,
    pi: Vec<f64>,
    /// Perturbed objective `c`, the right-hand side of the dual.
    rhs: Vec<f64>,
    /// Priced pairs `(j, L_ij)` per row `i`, ascending in `j`.
    pairs: Vec<Vec<(usize, f64)>>,
}

pub(crate) fn solve(p: &Program) -> Result<Solution> {
    let m = p.cost.len();
    if p.cap.len() != m || p.weight.len() != m || p.lip.len() != m * m {
        return Err(Error::Lp("inconsistent program dimensions".into()));
    }
    let umax = p.cap.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut d = Dual {
        p,
        m,
        tol: 1e-11 * umax.max(1e-300),
        basis: Vec::with_capacity(m),
        binv: vec![0.0; m * m],
        x: vec![0.0; m],
        pi: vec![0.0; m],
        rhs: perturbed(p.cost),
        pairs: priced_pairs(p, m),
    };
    for i in 0..m {
        let up = d.rhs[i] >= 0.0;
        d.basis.push(if up { Col::Up(i) } else { Col::Down(i) });
        d.binv[i * m + i] = if up { 1.0 } else { -1.0 };
        d.x[i] = d.rhs[i].abs();
        d.pi[i] = if up { p.cap[i] } else { -p.cap[i] };
    }
    let pivots = d.run()?;
    let psi = d.pi.clone();
    let value = p.cost.iter().zip(&psi).map(|(c, v)| c * v).sum();
    Ok(Solution { psi, value, pivots })
}

/// Pairs that can bind. A pair is skipped when the caps imply it
/// (`L_ij ≥ u_i + u_j`) or when a path through a third point with strictly
/// smaller bounds does (`L_ik + L_kj ≤ L_ij`). The strict inequality keeps
/// the implication well founded when some bounds vanish.
fn priced_pairs(p: &Program, m: usize) -> Vec<Vec<(usize, f64)>> {
    let lip = p.lip;
    let mut pairs = vec![Vec::new(); m];
    for i in 0..m {
        let ri = &lip[i * m..(i + 1) * m];
        for j in i + 1..m {
            let l = ri[j];
            if l >= p.cap[i] + p.cap[j] {
                continue;
            }
            let rj = &lip[j * m..(j + 1) * m];
            let implied = (0..m).any(|k| ri[k] < l && rj[k] < l && ri[k] + rj[k] <= l);
            if !implied {
                pairs[i].push((j, l));
                pairs[j].push((i, l));
            }
        }
    }
    pairs.iter_mut().for_each(|row| row.sort_by_key(|&(j, _)| j));
    pairs
}

/// `c_i ± ε(1 + frac(iφ))`, pushed away from zero in the direction of `c_i`.
fn perturbed(cost: &[f64]) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    cost.iter()
        .enumerate()
        .map(|(i, &c)| {
            let e = PERTURBATION * (1.0 + (i as f64 * GOLDEN).fract());
            if c >= 0.0 {
                c + e
            } else {
                c - e
            }
        })
        .collect()
}

impl Dual<'_> {
    fn col_cost(&self, c: Col) -> f64 {
        match c {
            Col::Shift => 0.0,
            Col::Up(i) | Col::Down(i) => self.p.cap[i],
            Col::Pair(i, j) => self.p.lip[i * self.m + j],
        }
    }

    fn col_order(&self, c: Col) -> usize {
        let m = self.m;
        match c {
            Col::Shift => 0,
            Col::Up(i) => 1 + i,
            Col::Down(i) => 1 + m + i,
            Col::Pair(i, j) => 1 + 2 * m + i * m + j,
        }
    }

    /// `B⁻¹ a` for a column.
    fn ftran(&self, c: Col, out: &mut [f64]) {
        let m = self.m;
        match c {
            Col::Shift => {
                for (r, o) in out.iter_mut().enumerate() {
                    let row = &self.binv[r * m..(r + 1) * m];
                    *o = row.iter().zip(self.p.weight).map(|(a, b)| a * b).sum();
                }
            }
            Col::Up(i) => (0..m).for_each(|r| out[r] = self.binv[r * m + i]),
            Col::Down(i) => (0..m).for_each(|r| out[r] = -self.binv[r * m + i]),
            Col::Pair(i, j) => (0..m).for_each(|r| out[r] = self.binv[r * m + i] - self.binv[r * m + j]),
        }
    }

    /// Entering column with direction, most negative reduced cost first or
    /// lowest order under Bland's rule.
    fn price(&self, bland: bool) -> Option<(Col, f64, f64)> {
        let m = self.m;
        let pi = &self.pi;
        let mut best: Option<(Col, f64, f64)> = None;
        let consider = |c: Col, d: f64, dir: f64, best: &mut Option<(Col, f64, f64)>| -> bool {
            if d < -self.tol {
                if bland {
                    *best = Some((c, dir, d));
                    return true;
                }
                if best.is_none_or(|(_, _, b)| d < b) {
                    *best = Some((c, dir, d));
                }
            }
            false
        };
        if !self.basis.contains(&Col::Shift) {
            let d: f64 = -pi.iter().zip(self.p.weight).map(|(a, b)| a * b).sum::<f64>();
            // A free column improves in either direction.
            if consider(Col::Shift, -d.abs(), if d < 0.0 { 1.0 } else { -1.0 }, &mut best) {
                return best;
            }
        }
        for i in 0..m {
            if consider(Col::Up(i), self.p.cap[i] - pi[i], 1.0, &mut best) {
                return best;
            }
        }
        for i in 0..m {
            if consider(Col::Down(i), self.p.cap[i] + pi[i], 1.0, &mut best) {
                return best;
            }
        }
        if bland {
            for (i, row) in self.pairs.iter().enumerate() {
                for &(j, l) in row {
                    if consider(Col::Pair(i, j), l - pi[i] + pi[j], 1.0, &mut best) {
                        return best;
                    }
                }
            }
            return best;
        }
        let mut best_pair: Option<(usize, usize, f64)> = None;
        for (i, row) in self.pairs.iter().enumerate() {
            for &(j, l) in row {
                let v = l - pi[i] + pi[j];
                if v < -self.tol && best_pair.is_none_or(|(_, _, b)| v < b) {
                    best_pair = Some((i, j, v));
                }
            }
        }
        if let Some((i, j, v)) = best_pair {
            if best.is_none_or(|(_, _, b)| v < b) {
                best = Some((Col::Pair(i, j), 1.0, v));
            }
        }
        best
    }

    fn run(&mut self) -> Result<usize> {
        let m = self.m;
        let limit = 400 * m + 10_000;
        let mut alpha = vec![0.0; m];
        let mut pivots = 0;
        let mut since_refactor = 0;
        let mut degenerate = 0;
        for _ in 0..limit {
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((col, dir, dj)) = self.price(bland) else {
                if since_refactor == 0 || self.residual() <= RESIDUAL_TOL {
                    return Ok(pivots);
                }
                self.refactor()?;
                since_refactor = 0;
                continue;
            };
            self.ftran(col, &mut alpha);
            let mut leave: Option<usize> = None;
            let mut step = f64::INFINITY;
            for r in 0..m {
                if self.basis[r] == Col::Shift {
                    continue;
                }
                let rate = dir * alpha[r];
                if rate <= PIVOT_TOL {
                    continue;
                }
                let t = self.x[r].max(0.0) / rate;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if t < step - 1e-14 {
                            true
                        } else if t <= step + 1e-14 {
                            if bland {
                                self.col_order(self.basis[r]) < self.col_order(self.basis[l])
                            } else {
                                rate > dir * alpha[l]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = t.min(step);
                    leave = Some(r);
                }
            }
            let Some(r) = leave else {
                return Err(Error::Lp("dual program unbounded; primal infeasible".into()));
            };
            if step > 1e-14 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            for i in 0..m {
                self.x[i] -= step * dir * alpha[i];
            }
            self.x[r] = dir * step;
            self.pivot(r, col, &alpha, dir * dj);
            pivots += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY && self.residual() > RESIDUAL_TOL {
                self.refactor()?;
                since_refactor = 0;
            }
        }
        Err(Error::Lp(format!("iteration limit {limit} reached")))
    }

    /// `dj` is the reduced cost of the column itself (not of the signed
    /// direction).
    fn pivot(&mut self, r: usize, col: Col, alpha: &[f64], dj: f64) {
        let m = self.m;
        let piv = alpha[r];
        let old: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        let scale = dj / piv;
        for (p, &b) in self.pi.iter_mut().zip(&old) {
            *p += scale * b;
        }
        let new_row: Vec<f64> = old.iter().map(|v| v / piv).collect();
        for i in 0..m {
            let f = alpha[i];
            if i == r || f == 0.0 {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (a, &b) in row.iter_mut().zip(&new_row) {
                *a -= f * b;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&new_row);
        self.basis[r] = col;
    }

    /// Largest violation of `B x = c` and `πᵀB = c_B`, both cheap because
    /// basis columns are sparse apart from the shift column.
    fn residual(&self) -> f64 {
        let mut bx: Vec<f64> = self.rhs.iter().map(|c| -c).collect();
        let mut worst: f64 = 0.0;
        for (r, &col) in self.basis.iter().enumerate() {
            let v = self.x[r];
            let pa = match col {
                Col::Shift => {
                    bx.iter_mut().zip(self.p.weight).for_each(|(b, w)| *b += w * v);
                    self.pi.iter().zip(self.p.weight).map(|(p, w)| p * w).sum()
                }
                Col::Up(i) => {
                    bx[i] += v;
                    self.pi[i]
                }
                Col::Down(i) => {
                    bx[i] -= v;
                    -self.pi[i]
                }
                Col::Pair(i, j) => {
                    bx[i] += v;
                    bx[j] -= v;
                    self.pi[i] - self.pi[j]
                }
            };
            worst = worst.max((pa - self.col_cost(col)).abs());
        }
        bx.iter().fold(worst, |a, b| a.max(b.abs()))
    }

    /// Recomputes the inverse, basic values and duals from the basis.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (c, &col) in self.basis.iter().enumerate() {
            match col {
                Col::Shift => (0..m).for_each(|r| b[r * m + c] = self.p.weight[r]),
                Col::Up(i) => b[i * m + c] = 1.0,
                Col::Down(i) => b[i * m + c] = -1.0,
                Col::Pair(i, j) => {
                    b[i * m + c] = 1.0;
                    b[j * m + c] = -1.0;
                }
            }
        }
        self.binv = invert(b, m).ok_or_else(|| Error::Lp("singular basis".into()))?;
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[r] = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        }
        let costs: Vec<f64> = self.basis.iter().map(|&c| self.col_cost(c)).collect();
        for i in 0..m {
            self.pi[i] = (0..m).map(|k| costs[k] * self.binv[k * m + i]).sum();
        }
        Ok(())
    }
}

/// Gauss–Jordan inverse with partial pivoting of a row-major `m × m` matrix.
fn invert(mut a: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let (piv, mag) = (col..m)
            .map(|r| (r, a[r * m + col].abs()))
            .fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if mag < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
        }
        let d = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= d;
            inv[col * m + k] /= d;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[col * m + k];
                inv[r * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cost: &[f64], cap: &[f64], weight: &[f64], lip: &[f64]) -> Solution {
        solve(&Program { cost, cap, weight, lip }).unwrap()
    }

    #[test]
    fn pair_bound_binds() {
        // max ψ₀ − ψ₁ with ψ₀ + ψ₁ = 0 and |ψ₀ − ψ₁| ≤ 1/2.
        let s = run(&[1.0, -1.0], &[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.5, 0.5, 0.0]);
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.psi[0] - 0.25).abs() < 1e-12 && (s.psi[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn caps_bind() {
        // u₀ = 0.3 binds, mean zero forces ψ₁ = −0.3.
        let s = run(&[1.0, -1.0], &[0.3, 1.0], &[1.0, 1.0], &[0.0, 5.0, 5.0, 0.0]);
        assert!((s.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn weighted_mean_zero() {
        // max ψ₀ with 2ψ₀ + ψ₁ = 0, |ψ| ≤ 1, |ψ₀ − ψ₁| ≤ 10: ψ₀ = 1/2.
        let s = run(&[1.0, 0.0], &[1.0, 1.0], &[2.0, 1.0], &[0.0, 10.0, 10.0, 0.0]);
        assert!((s.value - 0.5).abs() < 1e-12, "{s:?}");
        assert!((2.0 * s.psi[0] + s.psi[1]).abs() < 1e-12);
    }

    #[test]
    fn three_point_chain() {
        // max ψ₂ − ψ₀ on a path 0–1–2 with unit steps of 1/4 and long pair
        // bound 0.4 < 1/2: the long pair binds.
        let lip = [0.0, 0.25, 0.4, 0.25, 0.0, 0.25, 0.4, 0.25, 0.0];
        let s = run(&[-1.0, 0.0, 1.0], &[1.0; 3], &[1.0; 3], &lip);
        assert!((s.value - 0.4).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn implied_long_pair() {
        // Same path with long bound 1/2 = 1/4 + 1/4, dropped from pricing.
        let lip = [0.0, 0.25, 0.5, 0.25, 0.0, 0.25, 0.5, 0.25, 0.0];
        let s = run(&[-1.0, 0.0, 1.0], &[1.0; 3], &[1.0; 3], &lip);
        assert!((s.value - 0.5).abs() < 1e-12, "{s:?}");
        assert!(s.psi[2] - s.psi[0] <= 0.5 + 1e-12);
    }

    #[test]
    fn vanishing_bounds_force_constant() {
        let s = run(&[1.0, -0.5, -0.5], &[1.0; 3], &[1.0; 3], &[0.0; 9]);
        assert!(s.value.abs() < 1e-12, "{s:?}");
        assert!(s.psi.iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn invert_roundtrip() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let inv = invert(a.clone(), 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
