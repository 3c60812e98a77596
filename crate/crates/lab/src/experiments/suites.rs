//! Property suites: LP against the grid oracle, structural properties of
//! `A_ω`, closed-form values, the Muckenhoupt weak bound and the
//! Calderón–Zygmund decomposition.

use homog_core::czwhitney::{cz_decompose, whitney_violations};
use homog_core::dyadic::DyadicSystem;
use homog_core::intrinsic::{evaluate, oracle, Boundary, TestClass};
use homog_core::squarefn::scale_radii;
use homog_core::weights::{muckenhoupt_weak_ratio, WeightPair};
use homog_core::{GridFunction, MetricMeasureSpace, Modulus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::draws;
use crate::error::Result;
use crate::report::{Check, Report, Row};

use super::audit::{level_range, random_space};

fn random_class(rng: &mut ChaCha8Rng) -> Result<TestClass> {
    let alpha = rng.gen_range(0.2..=1.0);
    let omega = Modulus::scaled(Modulus::power(alpha)?, rng.gen_range(0.5..=2.0))?;
    let boundary = if rng.gen_bool(0.5) {
        Boundary::Pinned
    } else {
        Boundary::WithinBall
    };
    Ok(TestClass::new(omega, rng.gen_range(0.05..=1.0), 2.0)?.with_boundary(boundary))
}

/// A random center and a scale whose ball keeps at most `max_points` points.
fn small_ball(rng: &mut ChaCha8Rng, space: &MetricMeasureSpace, max_points: usize) -> (usize, i32) {
    let x = rng.gen_range(0..space.len());
    let mut ds: Vec<f64> = (0..space.len()).map(|y| space.dist(x, y)).collect();
    ds.sort_by(f64::total_cmp);
    let limit = ds.get(max_points).copied().unwrap_or(2.0 * space.diameter() + 1.0);
    (x, limit.log2().floor() as i32)
}

pub fn lp_oracle(cfg: &ExperimentConfig) -> Result<Report> {
    const DELTA: f64 = 1e-3;
    let mut report = Report::new(cfg, "oracle interval [lo, lo + δ Σ_B |f| μ] with δ = 1e-3");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut outside, mut nontrivial) = (0, 0);
    for t in 0..cfg.trials {
        let d = rng.gen_range(1..=2);
        let n = rng.gen_range(3..=8);
        let space = random_space(&mut rng, d, n)?;
        let class = random_class(&mut rng)?;
        let f = draws::signed(&mut rng, n);
        let (x, k) = small_ball(&mut rng, &space, 3);
        let ev = evaluate(&space, &f, x, k, &class)?;
        let iv = oracle(&space, &f, x, k, &class, DELTA)?;
        if ev.ball.len() >= 2 {
            nontrivial += 1;
        }
        if !iv.contains(ev.value, cfg.threshold) {
            outside += 1;
        }
        report.rows.push(
            Row::new(t, "ball")
                .with("points", ev.ball.len() as f64)
                .with("value", ev.value)
                .with("lo", iv.lo)
                .with("hi", iv.hi),
        );
    }
    report.constant("nontrivial_balls", nontrivial as f64);
    report.check(Check::holds("LP value inside oracle interval", outside));
    Ok(report)
}

struct Trial {
    space: MetricMeasureSpace,
    class: TestClass,
    f: GridFunction,
    x: usize,
    k: i32,
}

fn random_trial(rng: &mut ChaCha8Rng) -> Result<Trial> {
    let d = rng.gen_range(1..=2);
    let n = rng.gen_range(3..=12);
    let space = random_space(rng, d, n)?;
    let class = random_class(rng)?;
    let f = draws::signed(rng, n);
    let keep = rng.gen_range(2..=n);
    let (x, k) = small_ball(rng, &space, keep);
    Ok(Trial { space, class, f, x, k })
}

pub fn functional_properties(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg, "absolute tolerance threshold·max(1, |values|)");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = |scale: f64| cfg.threshold * scale.max(1.0);
    let a = |t: &Trial, f: &GridFunction, class: &TestClass| -> Result<f64> {
        Ok(evaluate(&t.space, f, t.x, t.k, class)?.value)
    };
    let names = [
        "sublinearity",
        "homogeneity",
        "constant shift invariance",
        "locality",
        "omega monotonicity",
        "Phi monotonicity",
    ];
    let mut failures = [0usize; 6];
    let mut worst = [0.0f64; 6];
    for _ in 0..cfg.trials {
        let t = random_trial(&mut rng)?;
        let n = t.space.len();
        let base = a(&t, &t.f, &t.class)?;

        let g = draws::signed(&mut rng, n);
        let sum = t.f.zip_with(&g, |u, v| u + v);
        let excess = a(&t, &sum, &t.class)? - base - a(&t, &g, &t.class)?;
        worst[0] = worst[0].max(excess);
        failures[0] += usize::from(excess > tol(base));

        let c = rng.gen_range(-3.0..=3.0);
        let err = (a(&t, &t.f.map(|u| c * u), &t.class)? - c.abs() * base).abs();
        worst[1] = worst[1].max(err);
        failures[1] += usize::from(err > tol(c.abs() * base));

        let shift = rng.gen_range(-5.0..=5.0);
        let err = (a(&t, &t.f.map(|u| u + shift), &t.class)? - base).abs();
        worst[2] = worst[2].max(err);
        failures[2] += usize::from(err > tol(base));

        let ball = t.space.ball(t.x, t.class.scale(t.k))?;
        let far = GridFunction::new(
            (0..n)
                .map(|y| if ball.contains(y) { t.f[y] } else { rng.gen_range(-10.0..=10.0) })
                .collect(),
        );
        let err = (a(&t, &far, &t.class)? - base).abs();
        worst[3] = worst[3].max(err);
        failures[3] += usize::from(err > tol(base));

        let wider = TestClass {
            omega: Modulus::scaled(t.class.omega.clone(), rng.gen_range(1.0..=3.0))?,
            ..t.class.clone()
        };
        let drop = base - a(&t, &t.f, &wider)?;
        worst[4] = worst[4].max(drop);
        failures[4] += usize::from(drop > tol(base));

        let taller = TestClass {
            phi: t.class.phi * rng.gen_range(1.0..=3.0),
            ..t.class.clone()
        };
        let drop = base - a(&t, &t.f, &taller)?;
        worst[5] = worst[5].max(drop);
        failures[5] += usize::from(drop > tol(base));
    }
    for i in 0..6 {
        report.constant(&format!("worst_{}", names[i].replace(' ', "_")), worst[i]);
        report.check(Check::holds(names[i], failures[i]));
    }
    Ok(report)
}

pub fn closed_forms(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg, "integral Dini and log-Dini norms by quadrature");
    let lin = Modulus::power(1.0)?;
    let root = Modulus::power(0.5)?;
    let values = [
        ("Dini norm of t", lin.dini_norm(32)?, 1.0),
        ("Dini norm of t^(1/2)", root.dini_norm(32)?, 2.0),
        ("log-Dini norm of t", lin.log_dini_norm(32)?, 1.0),
        ("log-Dini norm of t^(1/2)", root.log_dini_norm(32)?, 4.0),
    ];
    for (name, value, target) in values {
        report.check(Check::within(name, value, target, cfg.threshold));
    }
    let space = MetricMeasureSpace::euclidean_grid(1, 2, 1.0)?;
    let f = GridFunction::new(vec![1.0, -1.0]);
    let class = TestClass::new(lin, 1.0, 2.0)?;
    let two_point = evaluate(&space, &f, 0, 1, &class)?.value;
    report.check(Check::within("two-point functional", two_point, 0.25, 1e-9));
    Ok(report)
}

pub fn muckenhoupt(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(
        cfg,
        "max_λ λ^p w{M_D(fσ) > λ} / ([w,σ]_{A_p} ∫ f^p σ), dyadic maximal over the same system",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut over = 0;
    for t in 0..cfg.trials {
        let (space, system) = if rng.gen_bool(0.5) {
            let n = rng.gen_range(8..=64);
            let space = MetricMeasureSpace::euclidean_grid(1, n, 1.0)?;
            let top = (n as f64).log2().ceil() as i32;
            let system = DyadicSystem::standard_euclidean(&space, 0, top)?;
            (space, system)
        } else {
            let d = rng.gen_range(1..=2);
            let n = rng.gen_range(6..=40);
            let space = random_space(&mut rng, d, n)?;
            let (lo, hi) = level_range(&space, 2.0);
            let order: Vec<usize> = (0..space.len()).collect();
            let system = DyadicSystem::build(&space, 2.0, lo, hi, &order)?;
            (space, system)
        };
        let n = space.len();
        let p = rng.gen_range(1.1..=5.0);
        let w = draws::weight(&mut rng, n, 3.0);
        let sigma = draws::weight(&mut rng, n, 3.0);
        let pair = WeightPair::new(&space, w, sigma, p)?;
        let f = GridFunction::new(
            (0..n)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
                .collect(),
        );
        let ratio = muckenhoupt_weak_ratio(&space, &system, &f, &pair)?;
        worst = worst.max(ratio);
        if ratio > 1.0 + cfg.threshold {
            over += 1;
        }
        report.rows.push(Row::new(t, "draw").with("p", p).with("ratio", ratio));
    }
    report.constant("max_ratio", worst);
    report.check(Check::holds("weak bound with constant 1", over));
    Ok(report)
}

pub fn cz_suite(cfg: &ExperimentConfig) -> Result<Report> {
    let space = cfg.space.build()?;
    let system = if space.grid().is_some() && cfg.kappa == 2.0 {
        DyadicSystem::standard_euclidean(&space, cfg.k_min, cfg.k_max)?
    } else {
        let order: Vec<usize> = (0..space.len()).collect();
        DyadicSystem::build(&space, cfg.kappa, cfg.k_min, cfg.k_max, &order)?
    };
    let n = space.len();
    let radii = scale_radii(system.kappa(), system.k_min(), system.k_max());
    let gammas = cfg
        .betas
        .iter()
        .map(|&b| space.aperture_gamma(b, &radii))
        .collect::<homog_core::Result<Vec<f64>>>()?;
    let mut report = Report::new(
        cfg,
        "good constant sup|g|/(γ^{1/2}λ), bad constant max_Q ∫|b_Q|/(γ^{1/2}λμ(Q)); \
         Ω = {M|f| > t} with λ = t γ^{1/2}, Whitney constant 1",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut recon, mut means, mut support, mut whit, mut uncovered) = (0, 0, 0, 0, 0);
    let mut good_max = vec![0.0f64; cfg.betas.len()];
    let mut bad_max = vec![0.0f64; cfg.betas.len()];
    for t in 0..cfg.trials {
        let f = match t % 3 {
            0 => draws::signed(&mut rng, n),
            1 => draws::nonnegative(&mut rng, n, true),
            _ => {
                let mut v = vec![0.0; n];
                v[rng.gen_range(0..n)] = rng.gen_range(10.0..1000.0);
                GridFunction::new(v)
            }
        };
        let mf = space.uncentered_maximal(&f.map(f64::abs))?;
        let mut levels: Vec<f64> = mf.values().to_vec();
        levels.sort_by(f64::total_cmp);
        let q = rng.gen_range(0.3..0.95);
        let threshold = levels[((n - 1) as f64 * q) as usize];
        if threshold <= 0.0 {
            continue;
        }
        for (i, (&beta, &gamma)) in cfg.betas.iter().zip(&gammas).enumerate() {
            let cz = cz_decompose(&space, &system, &f, threshold * gamma.sqrt(), beta, 1.0)?;
            let back = cz.reconstruct();
            let scale = f.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if (0..n).any(|x| (back[x] - f[x]).abs() > 1e-12 * scale) {
                recon += 1;
            }
            for b in &cz.bad {
                let l1: f64 = b.members.iter().zip(&b.values).map(|(&y, v)| v.abs() * space.mass(y)).sum();
                if b.integral(&space).abs() > 1e-12 * l1.max(1.0) {
                    means += 1;
                }
                if b.members != system.cube(b.cube).members {
                    support += 1;
                }
            }
            if !cz.omega.is_empty() {
                whit += whitney_violations(&space, &system, &cz.omega, &cz.whitney, beta, 1.0)?.len();
            }
            uncovered += cz.uncovered.len();
            good_max[i] = good_max[i].max(cz.good_constant);
            bad_max[i] = bad_max[i].max(cz.bad_constant);
            report.rows.push(
                Row::new(t, format!("beta={beta}"))
                    .with("beta", beta)
                    .with("omega_points", cz.omega.len() as f64)
                    .with("whitney_cubes", cz.whitney.len() as f64)
                    .with("good_constant", cz.good_constant)
                    .with("bad_constant", cz.bad_constant)
                    .with("dilate_escapes", cz.dilate_escapes.len() as f64),
            );
        }
    }
    for (i, &beta) in cfg.betas.iter().enumerate() {
        report.constant(&format!("gamma_beta_{beta}"), gammas[i]);
        report.constant(&format!("good_constant_beta_{beta}"), good_max[i]);
        report.constant(&format!("bad_constant_beta_{beta}"), bad_max[i]);
    }
    let growth = good_max.iter().copied().fold(0.0, f64::max) / good_max[0];
    report.constant("good_constant_growth", growth);
    report.check(Check::holds("exact reconstruction", recon));
    report.check(Check::holds("bad parts have zero mean", means));
    report.check(Check::holds("bad parts supported on their cube", support));
    report.check(Check::holds("Whitney condition recheck", whit));
    report.check(Check::holds("Whitney cubes cover Omega", uncovered));
    report.check(Check::at_most("good constant growth over smallest beta", growth, cfg.threshold));
    Ok(report)
}
