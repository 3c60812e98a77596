//! E1 (weighted `L²` ratio across apertures) and E2 (weak `(1,1)` ratio
//! across apertures), sharing one random family of `(f, v)` and fields.

use homog_core::intrinsic::{field, FunctionalField, TestClass};
use homog_core::squarefn::{scale_radii, square_from_field, weighted_l2_ratio_from};
use homog_core::{GridFunction, MetricMeasureSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, LambdaGrid};
use crate::draws;
use crate::error::{config_error, Result};
use crate::report::{Check, Report, Row};

use super::{lambda_sup, variation};

pub struct Member {
    pub f: GridFunction,
    pub v: GridFunction,
    pub field: FunctionalField,
}

/// Random `(f, v)` draws with their fields `A_ω f(·,k)`.
pub struct Family {
    pub space: MetricMeasureSpace,
    pub class: TestClass,
    pub members: Vec<Member>,
    key: String,
}

fn family_key(cfg: &ExperimentConfig) -> String {
    format!(
        "{:?}|{}|{}|{}|{:?}|{}|{}|{}|{}|{}",
        cfg.space, cfg.omega, cfg.phi, cfg.kappa, cfg.boundary, cfg.k_min, cfg.k_max, cfg.trials, cfg.seed, cfg.heavy_tailed
    )
}

impl Family {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let space = cfg.space.build()?;
        let class = cfg.test_class()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = space.len();
        let mut members = Vec::with_capacity(cfg.trials);
        for _ in 0..cfg.trials {
            let f = draws::nonnegative(&mut rng, n, cfg.heavy_tailed);
            let v = draws::nonnegative(&mut rng, n, cfg.heavy_tailed);
            let fld = field(&space, &f, &class, cfg.k_min, cfg.k_max)?;
            members.push(Member { f, v, field: fld });
        }
        Ok(Self {
            space,
            class,
            members,
            key: family_key(cfg),
        })
    }

    pub fn matches(&self, cfg: &ExperimentConfig) -> bool {
        self.key == family_key(cfg)
    }

    fn check_matches(&self, cfg: &ExperimentConfig) -> Result<()> {
        if self.matches(cfg) {
            Ok(())
        } else {
            Err(config_error("the shared family was built from a different configuration"))
        }
    }
}

pub fn l2_aperture(cfg: &ExperimentConfig) -> Result<Report> {
    l2_aperture_with(cfg, &Family::build(cfg)?)
}

pub fn l2_aperture_with(cfg: &ExperimentConfig, family: &Family) -> Result<Report> {
    family.check_matches(cfg)?;
    let mut report = Report::new(
        cfg,
        "∫ G_β² v / (Φ · Σ_k ω(κ^-k) · ∫ |f|² Mv), sum-form Dini norm",
    );
    let mut max_per_beta = Vec::with_capacity(cfg.betas.len());
    for &beta in &cfg.betas {
        let mut best: f64 = 0.0;
        for (t, m) in family.members.iter().enumerate() {
            let r = weighted_l2_ratio_from(&family.space, &m.field, &m.f, &m.v, &family.class, beta)?;
            best = best.max(r);
            report.rows.push(Row::new(t, format!("beta={beta}")).with("beta", beta).with("ratio", r));
        }
        report.constant(&format!("max_ratio_beta_{beta}"), best);
        max_per_beta.push(best);
    }
    let var = variation(&max_per_beta);
    report.constant("variation", var);
    report.check(Check::at_most("max ratio variation across beta", var, cfg.threshold));
    Ok(report)
}

pub fn weak11(cfg: &ExperimentConfig) -> Result<Report> {
    weak11_with(cfg, &Family::build(cfg)?)
}

pub fn weak11_with(cfg: &ExperimentConfig, family: &Family) -> Result<Report> {
    family.check_matches(cfg)?;
    let space = &family.space;
    let class = &family.class;
    let log_dini = class.omega.log_dini_sum(class.kappa)?;
    let dini = class.omega.dini_sum(class.kappa)?;
    let radii = scale_radii(class.kappa, cfg.k_min, cfg.k_max);
    let epsilon = space.reverse_doubling_epsilon(class.kappa, &radii)?;
    let mut report = Report::new(
        cfg,
        "sup_λ λ v{G_β > λ} / (γ^{1/2} · ‖ω‖ · ∫ |f| Mv) with ‖ω‖ the sum-form \
         log-Dini norm Σ (k+1) ω(κ^-k); the Dini variant uses Σ ω(κ^-k)",
    );
    report.constant("log_dini_sum", log_dini);
    report.constant("dini_sum", dini);
    report.constant("reverse_doubling_epsilon", epsilon);
    let mvs: Vec<GridFunction> = family
        .members
        .iter()
        .map(|m| space.uncentered_maximal(&m.v))
        .collect::<homog_core::Result<_>>()?;
    let mut log_max = Vec::new();
    let mut dini_max = Vec::new();
    let mut bare_max = Vec::new();
    for &beta in &cfg.betas {
        let (mut best_log, mut best_dini, mut best_bare): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut gamma = 1.0;
        for (t, (m, mv)) in family.members.iter().zip(&mvs).enumerate() {
            let sq = square_from_field(space, &m.field, class.kappa, beta)?;
            gamma = sq.gamma;
            let num = lambda_sup(space, &sq.g, &m.v, 1.0, &cfg.lambda_grid);
            let den: f64 = (0..space.len()).map(|x| m.f[x].abs() * mv[x] * space.mass(x)).sum();
            let base = if den == 0.0 { 0.0 } else { num / (sq.gamma.sqrt() * den) };
            let (r_log, r_dini) = (base / log_dini, base / dini);
            best_log = best_log.max(r_log);
            best_dini = best_dini.max(r_dini);
            best_bare = best_bare.max(r_log * sq.gamma.sqrt());
            report.rows.push(
                Row::new(t, format!("beta={beta}"))
                    .with("beta", beta)
                    .with("gamma", sq.gamma)
                    .with("ratio_log_dini", r_log)
                    .with("ratio_dini", r_dini),
            );
        }
        report.constant(&format!("gamma_beta_{beta}"), gamma);
        report.constant(&format!("max_ratio_log_dini_beta_{beta}"), best_log);
        report.constant(&format!("max_ratio_dini_beta_{beta}"), best_dini);
        log_max.push(best_log);
        dini_max.push(best_dini);
        bare_max.push(best_bare);
    }
    report.constant("variation_without_gamma", variation(&bare_max));
    let var_log = variation(&log_max);
    report.constant("variation_log_dini", var_log);
    report.check(Check::at_most("log-Dini ratio variation across beta", var_log, cfg.threshold));
    if epsilon > 0.0 {
        let growth = dini_max.iter().copied().fold(0.0, f64::max) / dini_max[0];
        report.constant("variation_dini", variation(&dini_max));
        report.constant("growth_dini", growth);
        report.check(Check::at_most(
            "Dini ratio growth over smallest beta (reverse doubling)",
            growth,
            cfg.threshold,
        ));
    }
    if matches!(cfg.lambda_grid, LambdaGrid::Quantiles { .. }) {
        report.normalization.push_str("; λ restricted to quantiles (lower bound)");
    }
    Ok(report)
}
