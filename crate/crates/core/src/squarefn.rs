//! The intrinsic square function
//! `G_{ω,β}f(x)² = Σ_k ⨍_{B(x,βκ^k)} A_ω f(y,k)² dμ(y)`, truncated to a finite
//! scale window, and the ratio probes for its weighted `L²` and weak `(1,1)`
//! bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::intrinsic::{field, FunctionalField, TestClass};
use crate::space::{GridFunction, MetricMeasureSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFunction {
    pub g: GridFunction,
    pub beta: f64,
    /// `max μ(B(x,βκ^k))/μ(B(x,κ^k))` over centers and the scale window.
    pub gamma: f64,
    pub k_min: i32,
    pub k_max: i32,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(invalid(format!("aperture beta must be >= 1, got {beta}")));
    }
    Ok(())
}

pub fn scale_radii(kappa: f64, k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| kappa.powi(k)).collect()
}

pub fn intrinsic_square(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    class: &TestClass,
    beta: f64,
    k_min: i32,
    k_max: i32,
) -> Result<SquareFunction> {
    check_beta(beta)?;
    let fld = field(space, f, class, k_min, k_max)?;
    square_from_field(space, &fld, class.kappa, beta)
}

/// `G_{ω,β}` from a precomputed field.
pub fn square_from_field(
    space: &MetricMeasureSpace,
    fld: &FunctionalField,
    kappa: f64,
    beta: f64,
) -> Result<SquareFunction> {
    check_beta(beta)?;
    let radii = scale_radii(kappa, fld.k_min, fld.k_max);
    let gamma = space.aperture_gamma(beta, &radii)?;
    let outer: Vec<f64> = radii.iter().map(|r| beta * r).collect();
    let g2 = averaged_sum(space, fld, &outer);
    Ok(SquareFunction {
        g: GridFunction(g2.into_iter().map(f64::sqrt).collect()),
        beta,
        gamma,
        k_min: fld.k_min,
        k_max: fld.k_max,
    })
}

/// The shifted comparison form `Σ_k ⨍_{B(x,c κ^k)} A(y, k − shift)²`, summed
/// over the `k` whose shifted scale lies in the field. Returns squares.
pub fn shifted_square_sq(
    space: &MetricMeasureSpace,
    fld: &FunctionalField,
    kappa: f64,
    radius_factor: f64,
    shift: i32,
) -> Vec<f64> {
    let radii: Vec<f64> = (fld.k_min..=fld.k_max)
        .map(|k| radius_factor * kappa.powi(k + shift))
        .collect();
    averaged_sum(space, fld, &radii)
}

/// `Σ_i ⨍_{B(x, radii[i])} A(·, k_min + i)²` for every `x`.
fn averaged_sum(space: &MetricMeasureSpace, fld: &FunctionalField, radii: &[f64]) -> Vec<f64> {
    let n = space.len();
    let levels = radii.len();
    let sq: Vec<Vec<f64>> = (0..levels)
        .map(|i| {
            let k = fld.k_min + i as i32;
            (0..n).map(|y| fld.get(y, k).powi(2) * space.mass(y)).collect()
        })
        .collect();
    let mut out = vec![0.0; n];
    let mut sums = vec![0.0; levels];
    let mut meas = vec![0.0; levels];
    for (x, slot) in out.iter_mut().enumerate() {
        sums.fill(0.0);
        meas.fill(0.0);
        for y in 0..n {
            let d = space.dist(x, y);
            let w = space.mass(y);
            for i in (0..levels).rev() {
                if d >= radii[i] {
                    break;
                }
                sums[i] += sq[i][y];
                meas[i] += w;
            }
        }
        *slot = (0..levels).map(|i| sums[i] / meas[i]).sum();
    }
    out
}

/// Result of [`l2_norm_probe`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2Probe {
    /// Largest `(Σ_{y,k} A(y,k)² μ(y))^{1/2}` seen over unit-norm draws.
    pub max_norm: f64,
    /// `max_norm / (Φ·Σ_k ω(κ^{-k}))^{1/2}`.
    pub ratio: f64,
    pub trials: usize,
}

/// Lower bound for the `L² → L²(X×ℤ)` norm of `f ↦ A_ω f` from random draws,
/// uniform on `[−1,1]` per point and normalized in `L²(μ)`.
pub fn l2_norm_probe(
    space: &MetricMeasureSpace,
    class: &TestClass,
    k_min: i32,
    k_max: i32,
    trials: usize,
    seed: u64,
) -> Result<L2Probe> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut done = 0;
    while done < trials {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = raw
            .iter()
            .enumerate()
            .map(|(y, v)| v * v * space.mass(y))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let f = GridFunction(raw.into_iter().map(|v| v / norm).collect());
        let fld = field(space, &f, class, k_min, k_max)?;
        let total: f64 = fld
            .values
            .iter()
            .map(|row| row.iter().enumerate().map(|(y, a)| a * a * space.mass(y)).sum::<f64>())
            .sum();
        best = best.max(total.sqrt());
        done += 1;
    }
    let dini = class.omega.dini_sum(class.kappa)?;
    Ok(L2Probe {
        max_norm: best,
        ratio: best / (class.phi * dini).sqrt(),
        trials,
    })
}

/// `∫ G² v / (Φ Σ_k ω(κ^{-k}) ∫ |f|² Mv)`; 0 when `f ≡ 0`.
pub fn weighted_l2_ratio(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    v: &GridFunction,
    class: &TestClass,
    beta: f64,
    k_min: i32,
    k_max: i32,
) -> Result<f64> {
    check_beta(beta)?;
    let fld = field(space, f, class, k_min, k_max)?;
    weighted_l2_ratio_from(space, &fld, f, v, class, beta)
}

pub fn weighted_l2_ratio_from(
    space: &MetricMeasureSpace,
    fld: &FunctionalField,
    f: &GridFunction,
    v: &GridFunction,
    class: &TestClass,
    beta: f64,
) -> Result<f64> {
    let mv = check_weight(space, v)?;
    let sq = square_from_field(space, fld, class.kappa, beta)?;
    let num: f64 = (0..space.len()).map(|x| sq.g[x].powi(2) * v[x] * space.mass(x)).sum();
    let den_f: f64 = (0..space.len()).map(|x| f[x].powi(2) * mv[x] * space.mass(x)).sum();
    if den_f == 0.0 {
        return Ok(0.0);
    }
    let dini = class.omega.dini_sum(class.kappa)?;
    Ok(num / (class.phi * dini * den_f))
}

/// Which norm of `ω` normalizes the weak `(1,1)` ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakNormalization {
    #[default]
    LogDini,
    Dini,
}

/// `sup_λ λ v{G > λ} / (γ^{1/2} ‖ω‖ ∫ |f| Mv)` with the sum-form norm chosen
/// by `norm`; 0 when `f ≡ 0`.
pub fn weak11_ratio(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    v: &GridFunction,
    class: &TestClass,
    beta: f64,
    k_min: i32,
    k_max: i32,
    norm: WeakNormalization,
) -> Result<f64> {
    check_beta(beta)?;
    let fld = field(space, f, class, k_min, k_max)?;
    weak11_ratio_from(space, &fld, f, v, class, beta, norm)
}

pub fn weak11_ratio_from(
    space: &MetricMeasureSpace,
    fld: &FunctionalField,
    f: &GridFunction,
    v: &GridFunction,
    class: &TestClass,
    beta: f64,
    norm: WeakNormalization,
) -> Result<f64> {
    let mv = check_weight(space, v)?;
    let sq = square_from_field(space, fld, class.kappa, beta)?;
    let num = weak_sup(space, &sq.g, v, 1.0);
    let den_f: f64 = (0..space.len()).map(|x| f[x].abs() * mv[x] * space.mass(x)).sum();
    if den_f == 0.0 {
        return Ok(0.0);
    }
    let omega_norm = match norm {
        WeakNormalization::LogDini => class.omega.log_dini_sum(class.kappa)?,
        WeakNormalization::Dini => class.omega.dini_sum(class.kappa)?,
    };
    Ok(num / (sq.gamma.sqrt() * omega_norm * den_f))
}

/// `sup_λ λ (w{g > λ})^{1/p}`, attained as `λ → g_i⁻` for some value `g_i`,
/// where it equals `g_i (w{g ≥ g_i})^{1/p}`.
pub fn weak_sup(space: &MetricMeasureSpace, g: &GridFunction, w: &GridFunction, p: f64) -> f64 {
    let mut order: Vec<usize> = (0..space.len()).filter(|&x| g[x] > 0.0).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut best: f64 = 0.0;
    let mut acc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let level = g[order[i]];
        while i < order.len() && g[order[i]] == level {
            acc += w[order[i]] * space.mass(order[i]);
            i += 1;
        }
        best = best.max(level * acc.powf(1.0 / p));
    }
    best
}

fn check_weight(space: &MetricMeasureSpace, v: &GridFunction) -> Result<GridFunction> {
    v.check_len(space)?;
    v.check_nonnegative()?;
    if v.values().iter().all(|&x| x == 0.0) {
        return Err(invalid("weight must not vanish identically"));
    }
    space.uncentered_maximal(v)
}
