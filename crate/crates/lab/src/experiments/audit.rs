//! E7: dyadic axioms, sparse-implies-Carleson and adjacency on random spaces.

use homog_core::dyadic::{audit_adjacency, DyadicSystem, SparseCertificate};
use homog_core::MetricMeasureSpace;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Check, Report, Row};

/// Random points in `[0,1]^d` with masses in `[0.5, 2]`.
pub fn random_space(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Result<MetricMeasureSpace> {
    let coords = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    let mass = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
    Ok(MetricMeasureSpace::from_coords(coords, mass)?)
}

/// Levels from singletons (`κ^{k_min}` below the smallest spacing) up to a
/// root (`κ^{k_max}` above the diameter).
pub fn level_range(space: &MetricMeasureSpace, kappa: f64) -> (i32, i32) {
    let spacing = space.min_spacing().unwrap_or(1.0);
    let k_min = (spacing.ln() / kappa.ln()).floor() as i32 - 1;
    let mut k_max = (space.diameter().max(spacing).ln() / kappa.ln()).ceil() as i32;
    while kappa.powi(k_max) <= space.diameter() {
        k_max += 1;
    }
    (k_min, k_max.max(k_min))
}

pub fn dyadic_audit(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg, "measured C₁ = max_Q max_{y∈Q} d(c_Q, y)/κ^k(Q)");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut axiom_fail, mut c1_fail) = (0, 0);
    let mut systems = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let d = rng.gen_range(1..=2);
        let n = rng.gen_range(6..=40);
        let kappa = if rng.gen_bool(0.5) { 2.0 } else { 3.0 };
        let space = random_space(&mut rng, d, n)?;
        let (k_min, k_max) = level_range(&space, kappa);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let system = DyadicSystem::build(&space, kappa, k_min, k_max, &order)?;
        let audit = system.audit_axioms(&space);
        if !audit.pass {
            axiom_fail += 1;
        }
        if audit.measured_c1 > audit.outer_bound {
            c1_fail += 1;
        }
        report.rows.push(
            Row::new(t, "space")
                .with("d", d as f64)
                .with("n", n as f64)
                .with("kappa", kappa)
                .with("violations", audit.violations.len() as f64)
                .with("measured_c1", audit.measured_c1)
                .with("outer_bound", audit.outer_bound)
                .with("measured_a0", audit.measured_a0.unwrap_or(f64::NAN)),
        );
        systems.push(system);
    }
    let (mut certified, mut attempts, mut carleson_fail) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    while certified < cfg.trials && attempts < 100 * cfg.trials {
        attempts += 1;
        let system = &systems[attempts % systems.len()];
        let density = rng.gen_range(0.05..0.5);
        let eta = rng.gen_range(0.1..0.7);
        let picks: Vec<usize> = (0..system.cubes().len())
            .filter(|_| rng.gen_bool(density))
            .collect();
        if picks.is_empty() {
            continue;
        }
        if let SparseCertificate::Certified(c) = system.certify_sparse(&picks, eta)? {
            certified += 1;
            let carleson = system.carleson_constant(&c.cubes);
            worst = worst.max(carleson * eta);
            if carleson > (1.0 / eta) * (1.0 + 1e-12) {
                carleson_fail += 1;
            }
        }
    }
    report.constant("certified_collections", certified as f64);
    report.constant("max_carleson_times_eta", worst);
    let mut uncovered = 0;
    for (label, d, n) in [("grid d=1", 1, 64), ("grid d=2", 2, 8)] {
        let space = MetricMeasureSpace::euclidean_grid(d, n, 1.0)?;
        let k_max = ((n as f64).log2().ceil() as i32) + 2;
        let family = DyadicSystem::adjacent_family(&space, 0, k_max)?;
        let adj = audit_adjacency(&space, &family);
        uncovered += adj.uncovered;
        report.constant(&format!("adjacency_c_{}", label.replace(' ', "_")), adj.smallest_c);
    }
    report.check(Check::holds("axioms (1)-(3) exact", axiom_fail));
    report.check(Check::holds("measured C1 within kappa/(kappa-1)+1", c1_fail));
    report.check(Check::at_least("certified random collections", certified as f64, cfg.trials as f64));
    report.check(Check::holds("sparse collections are 1/eta-Carleson", carleson_fail));
    report.check(Check::holds("every realized ball lies in an adjacent cube", uncovered));
    Ok(report)
}
