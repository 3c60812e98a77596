//! Stopping-time sparse domination of the intrinsic square function and the
//! sparse operators it produces.

use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, DyadicSystem, SparseCertificate, SparseCollection};
use crate::error::{invalid, Error, Result};
use crate::intrinsic::{field, FunctionalField, TestClass};
use crate::space::{GridFunction, MetricMeasureSpace};
use crate::squarefn::{scale_radii, square_from_field};

/// Tunables of the stopping-time construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationConfig {
    pub eta: f64,
    /// `β = κ^{Δk}`.
    pub delta_k: i32,
    /// `C` in the averages over `B(x', Cκ^k)`.
    #[serde(default = "default_dilation")]
    pub ball_dilation: f64,
    /// `C` in the oscillation over `CQ = B(c_Q, C·C₁κ^{k(Q)})`.
    #[serde(default = "default_dilation")]
    pub cube_dilation: f64,
    #[serde(default = "default_initial_stop")]
    pub initial_stop: f64,
    #[serde(default = "default_escalations")]
    pub max_escalations: usize,
}

fn default_dilation() -> f64 {
    3.0
}

fn default_initial_stop() -> f64 {
    1e-3
}

fn default_escalations() -> usize {
    80
}

impl DominationConfig {
    pub fn new(eta: f64, delta_k: i32) -> Self {
        Self {
            eta,
            delta_k,
            ball_dilation: default_dilation(),
            cube_dilation: default_dilation(),
            initial_stop: default_initial_stop(),
            max_escalations: default_escalations(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid(format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if self.delta_k < 0 {
            return Err(invalid(format!("delta_k must be >= 0, got {}", self.delta_k)));
        }
        if !(self.ball_dilation > 0.0 && self.cube_dilation > 0.0) {
            return Err(invalid("dilation constants must be positive"));
        }
        if !(self.initial_stop > 0.0 && self.initial_stop.is_finite()) {
            return Err(invalid("initial stopping constant must be positive"));
        }
        Ok(())
    }
}

/// `Δk = round(log_κ β)`.
pub fn delta_k_for(beta: f64, kappa: f64) -> Result<i32> {
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(invalid(format!("aperture beta must be >= 1, got {beta}")));
    }
    Ok((beta.ln() / kappa.ln()).round() as i32)
}

/// Weighted median of `f` over `set`: the smallest value whose cumulative
/// mass reaches half of the total.
pub fn weighted_median(space: &MetricMeasureSpace, f: &GridFunction, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let mut pts: Vec<usize> = set.to_vec();
    pts.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let total: f64 = pts.iter().map(|&y| space.mass(y)).sum();
    let mut acc = 0.0;
    for &y in &pts {
        acc += space.mass(y);
        if acc >= 0.5 * total * (1.0 - 1e-14) {
            return f[y];
        }
    }
    f[*pts.last().unwrap()]
}

/// `inf_c ⨍_set |f − c|`, attained at the weighted median.
pub fn oscillation(space: &MetricMeasureSpace, f: &GridFunction, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let c = weighted_median(space, f, set);
    let num: f64 = set.iter().map(|&y| (f[y] - c).abs() * space.mass(y)).sum();
    num / space.measure(set)
}

/// Oscillation of `f` over the dilate `CQ` of every cube of the system.
pub fn cube_oscillations(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    f: &GridFunction,
    dilation: f64,
) -> Vec<f64> {
    system
        .cubes()
        .iter()
        .map(|q| oscillation(space, f, &system.dilate_members(space, q.id, dilation)))
        .collect()
}

/// Precomputed `F(Q',Q) = sup_{x'∈Q'} Σ_{k=k(Q')}^{k(Q)} ⨍_{B(x',Cκ^k)} A(y,k−Δk)² dy`.
#[derive(Clone, Debug)]
pub struct PairFunctional {
    k_min: i32,
    k_max: i32,
    /// `best[Q][b − k(Q)] = F(Q, any cube at level b above Q)`.
    best: Vec<Vec<f64>>,
    levels: Vec<i32>,
}

impl PairFunctional {
    /// `fld` must cover the scales `[k_min − Δk, k_max − Δk]` of the system.
    pub fn new(
        space: &MetricMeasureSpace,
        system: &DyadicSystem,
        fld: &FunctionalField,
        delta_k: i32,
        ball_dilation: f64,
    ) -> Result<Self> {
        let (k_min, k_max) = (system.k_min(), system.k_max());
        if fld.k_min > k_min - delta_k || fld.k_max < k_max - delta_k {
            return Err(invalid(format!(
                "field covers scales [{}, {}] but [{}, {}] are needed",
                fld.k_min,
                fld.k_max,
                k_min - delta_k,
                k_max - delta_k
            )));
        }
        let n = space.len();
        let depth = (k_max - k_min + 1) as usize;
        // term[i][x] = ⨍_{B(x, Cκ^k)} A(·, k − Δk)² with k = k_min + i.
        let mut term = vec![vec![0.0; n]; depth];
        for (i, row) in term.iter_mut().enumerate() {
            let k = k_min + i as i32;
            let a = fld.at_scale(k - delta_k).expect("coverage checked");
            let r = ball_dilation * system.scale(k);
            for (x, slot) in row.iter_mut().enumerate() {
                let (mut num, mut den) = (0.0, 0.0);
                for y in 0..n {
                    if space.dist(x, y) < r {
                        num += a[y] * a[y] * space.mass(y);
                        den += space.mass(y);
                    }
                }
                *slot = num / den;
            }
        }
        let best = system
            .cubes()
            .iter()
            .map(|q| {
                let lo = (q.level - k_min) as usize;
                let mut row = vec![0.0; depth - lo];
                for &x in &q.members {
                    let mut acc = 0.0;
                    for (j, slot) in row.iter_mut().enumerate() {
                        acc += term[lo + j][x];
                        *slot = f64::max(*slot, acc);
                    }
                }
                row
            })
            .collect();
        Ok(Self {
            k_min,
            k_max,
            best,
            levels: system.cubes().iter().map(|q| q.level).collect(),
        })
    }

    /// `F(inner, outer)`; rejects pairs that are not nested in the tree.
    pub fn value(&self, system: &DyadicSystem, inner: CubeId, outer: CubeId) -> Result<f64> {
        if inner >= self.levels.len() || outer >= self.levels.len() {
            return Err(invalid("cube id out of range"));
        }
        if !system.is_descendant(inner, outer) {
            return Err(Error::Sparse(format!("cube {inner} is not contained in cube {outer}")));
        }
        Ok(self.get(inner, self.levels[outer]))
    }

    fn get(&self, inner: CubeId, outer_level: i32) -> f64 {
        self.best[inner][(outer_level - self.levels[inner]) as usize]
    }

    /// `sup_{x ∈ Q' ⊆ Q} F(Q',Q)` at every point.
    pub fn sup_pointwise(&self, system: &DyadicSystem) -> Vec<f64> {
        (0..system.n_points())
            .map(|x| {
                let mut m: f64 = 0.0;
                for a in self.k_min..=self.k_max {
                    if let Some(q) = system.cube_at(x, a) {
                        m = self.best[q].iter().fold(m, |acc, &v| acc.max(v));
                    }
                }
                m
            })
            .collect()
    }
}

/// `F(inner, outer)` computed from scratch for one pair.
pub fn f_pair(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    f: &GridFunction,
    class: &TestClass,
    delta_k: i32,
    ball_dilation: f64,
    inner: CubeId,
    outer: CubeId,
) -> Result<f64> {
    if !system.is_descendant(inner, outer) {
        return Err(Error::Sparse(format!("cube {inner} is not contained in cube {outer}")));
    }
    let fld = field(space, f, class, system.k_min() - delta_k, system.k_max() - delta_k)?;
    PairFunctional::new(space, system, &fld, delta_k, ball_dilation)?.value(system, inner, outer)
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationResult {
    pub collection: SparseCollection,
    pub delta_k: i32,
    /// Levels `[k_min, k_max]` of the stopping construction.
    pub window: (i32, i32),
    /// Stopping constant at which the packing condition first held.
    pub stop_constant: f64,
    pub escalations: usize,
    pub gamma: f64,
    pub log_dini: f64,
    /// `max_x sup-F(x) / (γ ‖ω‖²/(1−η)² Σ_{Q∈S∋x} osc(Q)²)`.
    pub measured_constant: f64,
    /// `osc(Q) = inf_c ⨍_{CQ} |f − c|` indexed by cube id.
    pub oscillations: Vec<f64>,
    /// Largest `Σ_{ch(P)} μ(P')/μ(P)` over stopping parents.
    pub worst_packing: f64,
    /// Chain pairs that satisfy the stopping inequality; empty when sound.
    pub stopping_pairs_rechecked: usize,
    pub nonstop_violations: Vec<(CubeId, CubeId)>,
    pub sup_f: Vec<f64>,
    pub sparse_square: Vec<f64>,
    pub config: DominationConfig,
}

struct Stopping<'a> {
    system: &'a DyadicSystem,
    pair: &'a PairFunctional,
    osc: &'a [f64],
    /// `γ^{1/2} ‖ω‖ / (1 − η)`.
    scale: f64,
}

impl Stopping<'_> {
    fn stops(&self, c_stop: f64, inner: CubeId, outer: CubeId) -> bool {
        let v = self.pair.get(inner, self.system.cube(outer).level);
        v > 0.0 && v.sqrt() >= c_stop * self.scale * self.osc[outer]
    }

    /// Maximal `P' ⊆ P` (including `P`) satisfying the stopping inequality.
    fn children(&self, c_stop: f64, parent: CubeId) -> Vec<CubeId> {
        let mut out = Vec::new();
        let mut stack = vec![parent];
        while let Some(q) = stack.pop() {
            if self.stops(c_stop, q, parent) {
                out.push(q);
            } else {
                stack.extend(self.system.cube(q).children.iter().rev().copied());
            }
        }
        out
    }

    /// All stopping cubes and their parents, or the first parent whose
    /// children pack worse than `1 − η`.
    fn run(&self, c_stop: f64, eta: f64) -> std::result::Result<(Vec<CubeId>, Vec<Option<CubeId>>, f64), f64> {
        let mut s: Vec<CubeId> = self.system.top_cubes().to_vec();
        let mut parent_of = vec![None; self.system.cubes().len()];
        let mut queue = s.clone();
        let mut worst: f64 = 0.0;
        while let Some(p) = queue.pop() {
            let ch = self.children(c_stop, p);
            let mass: f64 = ch.iter().map(|&c| self.system.cube(c).measure).sum();
            let ratio = mass / self.system.cube(p).measure;
            if ratio > (1.0 - eta) * (1.0 + 1e-12) {
                return Err(ratio);
            }
            worst = worst.max(ratio);
            for c in ch {
                parent_of[c] = Some(p);
                s.push(c);
                queue.push(c);
            }
        }
        s.sort_unstable();
        Ok((s, parent_of, worst))
    }
}

/// Stopping-time construction with automatic escalation of the stopping
/// constant, followed by the pointwise domination check.
pub fn sparse_dominate(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    f: &GridFunction,
    class: &TestClass,
    config: &DominationConfig,
) -> Result<DominationResult> {
    config.validate()?;
    let fld = field(
        space,
        f,
        class,
        system.k_min() - config.delta_k,
        system.k_max() - config.delta_k,
    )?;
    sparse_dominate_from(space, system, &fld, f, class, config)
}

pub fn sparse_dominate_from(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    fld: &FunctionalField,
    f: &GridFunction,
    class: &TestClass,
    config: &DominationConfig,
) -> Result<DominationResult> {
    config.validate()?;
    f.check_len(space)?;
    if (system.kappa() - class.kappa).abs() > 1e-12 {
        return Err(invalid("test class and dyadic system use different kappa"));
    }
    let beta = system.kappa().powi(config.delta_k);
    let gamma = space.aperture_gamma(beta, &scale_radii(system.kappa(), system.k_min(), system.k_max()))?;
    let log_dini = class.omega.log_dini_sum(class.kappa)?;
    let pair = PairFunctional::new(space, system, fld, config.delta_k, config.ball_dilation)?;
    let osc = cube_oscillations(space, system, f, config.cube_dilation);
    let stopping = Stopping {
        system,
        pair: &pair,
        osc: &osc,
        scale: gamma.sqrt() * log_dini / (1.0 - config.eta),
    };
    let mut c_stop = config.initial_stop;
    let mut escalations = 0;
    let (cubes, parent_of, worst_packing) = loop {
        match stopping.run(c_stop, config.eta) {
            Ok(found) => break found,
            Err(ratio) => {
                if escalations >= config.max_escalations {
                    return Err(Error::Sparse(format!(
                        "packing still fails (ratio {ratio}) at stopping constant {c_stop} \
                         after {escalations} escalations"
                    )));
                }
                c_stop *= 2.0;
                escalations += 1;
            }
        }
    };
    let collection = match system.certify_sparse(&cubes, config.eta)? {
        SparseCertificate::Certified(c) => c,
        SparseCertificate::Failed { cube, ratio } => {
            return Err(Error::Sparse(format!(
                "certificate fails at cube {cube} with ratio {ratio}"
            )))
        }
    };

    let (pairs, violations) = recheck_nonstopping(&stopping, c_stop, &cubes, &parent_of);
    let sup_f = pair.sup_pointwise(system);
    let sparse_square = sum_over_collection(system, &cubes, |q| osc[q] * osc[q]);
    let norm = gamma * log_dini * log_dini / (1.0 - config.eta).powi(2);
    let measured_constant = sup_f
        .iter()
        .zip(&sparse_square)
        .map(|(&l, &r)| {
            if l == 0.0 {
                0.0
            } else if r == 0.0 {
                f64::INFINITY
            } else {
                l / (norm * r)
            }
        })
        .fold(0.0, f64::max);
    Ok(DominationResult {
        collection,
        delta_k: config.delta_k,
        window: (system.k_min(), system.k_max()),
        stop_constant: c_stop,
        escalations,
        gamma,
        log_dini,
        measured_constant,
        oscillations: osc,
        worst_packing,
        stopping_pairs_rechecked: pairs,
        nonstop_violations: violations,
        sup_f,
        sparse_square,
        config: config.clone(),
    })
}

/// For every stopping cube `P`: the pairs `(parent of P', P)` for its stopping
/// children `P'`, and `(Q, P)` for bottom cubes `Q` whose nearest stopping
/// ancestor is `P`, must all fail the stopping inequality.
fn recheck_nonstopping(
    stopping: &Stopping,
    c_stop: f64,
    cubes: &[CubeId],
    parent_of: &[Option<CubeId>],
) -> (usize, Vec<(CubeId, CubeId)>) {
    let system = stopping.system;
    let mut in_s = vec![false; system.cubes().len()];
    for &q in cubes {
        in_s[q] = true;
    }
    let mut pairs = Vec::new();
    for &q in cubes {
        if let Some(p) = parent_of[q] {
            let hat = system.cube(q).parent.expect("stopping children sit below their parent");
            pairs.push((hat, p));
        }
    }
    for &q in system.level(system.k_min()) {
        let mut cur = Some(q);
        while let Some(c) = cur {
            if in_s[c] {
                pairs.push((q, c));
                break;
            }
            cur = system.cube(c).parent;
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let violations = pairs
        .iter()
        .copied()
        .filter(|&(inner, outer)| stopping.stops(c_stop, inner, outer))
        .collect();
    (pairs.len(), violations)
}

fn sum_over_collection(
    system: &DyadicSystem,
    cubes: &[CubeId],
    weight: impl Fn(CubeId) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; system.n_points()];
    for &q in cubes {
        let w = weight(q);
        for &x in &system.cube(q).members {
            out[x] += w;
        }
    }
    out
}

/// `x ↦ Σ_{Q∈S} 1_Q(x) osc(Q)²` with `osc(Q) = inf_c ⨍_{CQ} |f − c|`.
pub fn sparse_square_apply(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    collection: &SparseCollection,
    f: &GridFunction,
    dilation: f64,
) -> Result<GridFunction> {
    f.check_len(space)?;
    let out = sum_over_collection(system, &collection.cubes, |q| {
        oscillation(space, f, &system.dilate_members(space, q, dilation)).powi(2)
    });
    Ok(GridFunction(out))
}

/// The same operator with the oscillation taken over `Q` itself.
pub fn sparse_square_undilated(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    collection: &SparseCollection,
    f: &GridFunction,
) -> Result<GridFunction> {
    f.check_len(space)?;
    let out = sum_over_collection(system, &collection.cubes, |q| {
        oscillation(space, f, &system.cube(q).members).powi(2)
    });
    Ok(GridFunction(out))
}

/// `(Σ_{Q∈S} (f)_Q^p 1_Q)^{1/p}` for `f ≥ 0`.
pub fn sparse_p_apply(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    collection: &SparseCollection,
    f: &GridFunction,
    p: f64,
) -> Result<GridFunction> {
    f.check_len(space)?;
    f.check_nonnegative()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must lie in (1,∞), got {p}")));
    }
    let sums = sum_over_collection(system, &collection.cubes, |q| {
        f.average_over(space, &system.cube(q).members).powf(p)
    });
    Ok(GridFunction(sums.into_iter().map(|s| s.powf(1.0 / p)).collect()))
}

/// Measured constants of `G_β² ≤ lower·sup F` and `sup F ≤ upper·G_{β'}²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub beta: f64,
    pub wide_beta: f64,
}

/// Compares `G_{ω,β}²` (with `β = κ^{Δk}`) and `G_{ω,β'}²` against the
/// pointwise supremum of `F`, all from one field over `[k_min−Δk, k_max−Δk]`.
pub fn sandwich(
    space: &MetricMeasureSpace,
    system: &DyadicSystem,
    fld: &FunctionalField,
    delta_k: i32,
    ball_dilation: f64,
    wide_beta: f64,
) -> Result<Sandwich> {
    let pair = PairFunctional::new(space, system, fld, delta_k, ball_dilation)?;
    let sup_f = pair.sup_pointwise(system);
    let beta = system.kappa().powi(delta_k);
    let narrow = square_from_field(space, fld, system.kappa(), beta)?;
    let wide = square_from_field(space, fld, system.kappa(), wide_beta)?;
    let ratio = |num: f64, den: f64| {
        if num == 0.0 {
            0.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    };
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for x in 0..space.len() {
        lower = lower.max(ratio(narrow.g[x].powi(2), sup_f[x]));
        upper = upper.max(ratio(sup_f[x], wide.g[x].powi(2)));
    }
    Ok(Sandwich {
        lower,
        upper,
        beta,
        wide_beta,
    })
}
