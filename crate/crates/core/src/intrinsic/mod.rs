//! The functional `A_ω f(x,k) = sup_φ |∫ f φ dμ|` over the test class at
//! center `x` and scale `s = κ^k`: functions supported in the open ball
//! `B = B(x,s)`, with mean zero, `|φ| ≤ Φ/μ(B)` and
//! `|φ(y) − φ(y')| ≤ ω(d(y,y')/s)/μ(B)`.
//!
//! On a finite space this is a linear program. It is solved in the scaled
//! variable `ψ = μ(B)·φ`, where the box is `|ψ| ≤ Φ` and the pair
//! constraints read `|ψ_i − ψ_j| ≤ ω(d_ij/s)`; the simplex works on its dual
//! (see [`simplex`]), whose basis size is the number of ball points.

mod oracle;
mod simplex;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modulus::Modulus;
use crate::space::{GridFunction, MetricMeasureSpace};

pub use oracle::{oracle, OracleInterval};

/// How the modulus constraint treats points outside the ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Out-of-ball partners count with `φ = 0`, which forces
    /// `|φ(y)| ≤ min_{y'∉B} ω(d(y,y')/s)/μ(B)` near the boundary.
    #[default]
    Pinned,
    /// Only pairs inside the ball are constrained.
    WithinBall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestClass {
    pub omega: Modulus,
    pub phi: f64,
    pub kappa: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl TestClass {
    pub fn new(omega: Modulus, phi: f64, kappa: f64) -> Result<Self> {
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(invalid(format!("Phi must be positive, got {phi}")));
        }
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must exceed 1, got {kappa}")));
        }
        Ok(Self {
            omega,
            phi,
            kappa,
            boundary: Boundary::Pinned,
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn scale(&self, k: i32) -> f64 {
        self.kappa.powi(k)
    }
}

/// Optimum of one test-class program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    /// Ball members, sorted.
    pub ball: Vec<usize>,
    /// Optimal `φ` on the ball members (zero elsewhere).
    pub optimizer: Vec<f64>,
    /// Simplex pivots used (0 when no program was solved).
    pub pivots: usize,
}

impl Evaluation {
    /// The optimizer as a function on the whole space.
    pub fn optimizer_function(&self, n: usize) -> GridFunction {
        let mut v = vec![0.0; n];
        for (&y, &p) in self.ball.iter().zip(&self.optimizer) {
            v[y] = p;
        }
        GridFunction(v)
    }
}

/// `A_ω f(x,k)` with an optimal `φ`.
pub fn evaluate(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    x: usize,
    k: i32,
    class: &TestClass,
) -> Result<Evaluation> {
    f.check_len(space)?;
    space.check_point(x)?;
    let s = class.scale(k);
    let ball = space.ball_members(x, s);
    solve_ball(space, f, ball, s, class)
}

pub(crate) fn solve_ball(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    ball: Vec<usize>,
    s: f64,
    class: &TestClass,
) -> Result<Evaluation> {
    let m = ball.len();
    let first = f[ball[0]];
    if m == 1 || ball.iter().all(|&y| f[y] == first) {
        return Ok(Evaluation {
            value: 0.0,
            optimizer: vec![0.0; m],
            ball,
            pivots: 0,
        });
    }
    let mu: f64 = space.measure(&ball);
    let masses: Vec<f64> = ball.iter().map(|&y| space.mass(y)).collect();
    let fbar: f64 = ball.iter().zip(&masses).map(|(&y, w)| f[y] * w).sum::<f64>() / mu;
    let mut cost: Vec<f64> = ball.iter().zip(&masses).map(|(&y, w)| (f[y] - fbar) * w).collect();
    let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if cmax == 0.0 {
        return Ok(Evaluation {
            value: 0.0,
            optimizer: vec![0.0; m],
            ball,
            pivots: 0,
        });
    }
    cost.iter_mut().for_each(|c| *c /= cmax);

    let omega = &class.omega;
    let upper: Vec<f64> = match class.boundary {
        Boundary::WithinBall => vec![class.phi; m],
        Boundary::Pinned => {
            let inside = {
                let mut v = vec![false; space.len()];
                ball.iter().for_each(|&y| v[y] = true);
                v
            };
            ball.iter()
                .map(|&y| {
                    let gap = (0..space.len())
                        .filter(|&z| !inside[z])
                        .map(|z| space.dist(y, z))
                        .fold(f64::INFINITY, f64::min);
                    if gap.is_finite() {
                        class.phi.min(omega.at(gap / s))
                    } else {
                        class.phi
                    }
                })
                .collect()
        }
    };
    let mut lip = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let l = omega.at(space.dist(ball[i], ball[j]) / s);
            lip[i * m + j] = l;
            lip[j * m + i] = l;
        }
    }
    let mmax = masses.iter().fold(0.0f64, |a, &w| a.max(w));
    let weight: Vec<f64> = masses.iter().map(|w| w / mmax).collect();
    let sol = simplex::solve(&simplex::Program {
        cost: &cost,
        cap: &upper,
        weight: &weight,
        lip: &lip,
    })?;
    let value = (sol.value * cmax / mu).max(0.0);
    Ok(Evaluation {
        value,
        optimizer: sol.psi.iter().map(|p| p / mu).collect(),
        ball,
        pivots: sol.pivots,
    })
}

/// `A_ω f(y,k)` for every point and every `k ∈ [k_min, k_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalField {
    pub k_min: i32,
    pub k_max: i32,
    /// `values[k − k_min][y]`.
    pub values: Vec<Vec<f64>>,
}

impl FunctionalField {
    pub fn zeros(n: usize, k_min: i32, k_max: i32) -> Self {
        Self {
            k_min,
            k_max,
            values: vec![vec![0.0; n]; (k_max - k_min + 1).max(0) as usize],
        }
    }

    /// Values at scale `k`, or `None` outside the computed range.
    pub fn at_scale(&self, k: i32) -> Option<&[f64]> {
        if k < self.k_min || k > self.k_max {
            return None;
        }
        Some(&self.values[(k - self.k_min) as usize])
    }

    /// `A(y,k)`, zero outside the computed range.
    pub fn get(&self, y: usize, k: i32) -> f64 {
        self.at_scale(k).map_or(0.0, |v| v[y])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }
}

/// Evaluates the functional on every `(y,k)`. Balls on which `f` is constant
/// are skipped and identical balls at the same scale are solved once.
pub fn field(
    space: &MetricMeasureSpace,
    f: &GridFunction,
    class: &TestClass,
    k_min: i32,
    k_max: i32,
) -> Result<FunctionalField> {
    f.check_len(space)?;
    if k_min > k_max {
        return Err(invalid(format!("empty scale range [{k_min}, {k_max}]")));
    }
    let n = space.len();
    let mut out = FunctionalField::zeros(n, k_min, k_max);
    for k in k_min..=k_max {
        let s = class.scale(k);
        let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
        let row = &mut out.values[(k - k_min) as usize];
        for (y, slot) in row.iter_mut().enumerate() {
            let ball = space.ball_members(y, s);
            let first = f[ball[0]];
            if ball.iter().all(|&z| f[z] == first) {
                continue;
            }
            if let Some(&v) = seen.get(&ball) {
                *slot = v;
                continue;
            }
            let v = solve_ball(space, f, ball.clone(), s, class)?.value;
            seen.insert(ball, v);
            *slot = v;
        }
    }
    Ok(out)
}
