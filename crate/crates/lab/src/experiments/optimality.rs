//! E4: growth of `sup_λ λ^p w{G_β f > λ}` in the aperture for a dipole and
//! power weights, against the exponent `d + α − dp/2`.

use homog_core::intrinsic::field;
use homog_core::squarefn::square_from_field;
use homog_core::weights::power_weight;
use homog_core::GridFunction;

use crate::config::ExperimentConfig;
use crate::error::{config_error, Result};
use crate::fit::log_log;
use crate::report::{Check, Report, Row};

use super::lambda_sup;

pub fn aperture_optimality(cfg: &ExperimentConfig) -> Result<Report> {
    let space = cfg.space.build()?;
    let d = space
        .grid()
        .ok_or_else(|| config_error("aperture-optimality needs a Euclidean grid"))?
        .d as f64;
    if space.len() < 2 {
        return Err(config_error("the dipole needs two points"));
    }
    let class = cfg.test_class()?;
    let mut f = GridFunction::zeros(space.len());
    f.0[0] = 1.0;
    f.0[1] = -1.0;
    let fld = field(&space, &f, &class, cfg.k_min, cfg.k_max)?;
    let squares = cfg
        .betas
        .iter()
        .map(|&b| square_from_field(&space, &fld, class.kappa, b))
        .collect::<homog_core::Result<Vec<_>>>()?;
    let mut report = Report::new(
        cfg,
        "lower envelope W(β) = sup_λ λ^p w{G_β f > λ} for f = δ_0 − δ_1, fitted as log W \
         against log β; target exponent d + α − dp/2",
    );
    for (i, sq) in squares.iter().enumerate() {
        report.constant(&format!("gamma_beta_{}", cfg.betas[i]), sq.gamma);
    }
    for (j, &alpha) in cfg.alphas.iter().enumerate() {
        let w = power_weight(&space, alpha)?;
        let envelope: Vec<f64> = squares
            .iter()
            .map(|sq| lambda_sup(&space, &sq.g, &w, cfg.p, &cfg.lambda_grid).powf(cfg.p))
            .collect();
        for (&beta, &e) in cfg.betas.iter().zip(&envelope) {
            report.rows.push(
                Row::new(j, format!("alpha={alpha}"))
                    .with("alpha", alpha)
                    .with("beta", beta)
                    .with("envelope", e),
            );
        }
        let target = d + alpha - d * cfg.p / 2.0;
        let fit = log_log(&cfg.betas, &envelope);
        let slope = fit.as_ref().map_or(f64::NAN, |f| f.slope);
        report.constant(&format!("slope_alpha_{alpha}"), slope);
        report.constant(&format!("target_alpha_{alpha}"), target);
        report.fit(&format!("alpha={alpha}"), fit, Some(target));
        report.check(Check::within(
            format!("fitted slope for alpha={alpha}"),
            slope,
            target,
            cfg.threshold,
        ));
    }
    Ok(report)
}
