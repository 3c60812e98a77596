//! The experiments and acceptance suites, dispatched by [`run`].

pub mod aperture;
pub mod audit;
pub mod optimality;
pub mod sparse_dom;
pub mod suites;
pub mod weighted;

use homog_core::squarefn::weak_sup;
use homog_core::{GridFunction, MetricMeasureSpace};

use crate::config::{ExperimentConfig, ExperimentId, LambdaGrid};
use crate::error::Result;
use crate::report::Report;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::L2Aperture => aperture::l2_aperture(cfg),
        ExperimentId::Weak11 => aperture::weak11(cfg),
        ExperimentId::SparseDom => sparse_dom::sparse_dom(cfg),
        ExperimentId::ApertureOptimality => optimality::aperture_optimality(cfg),
        ExperimentId::TwoWeightLog => weighted::two_weight_log(cfg),
        ExperimentId::OneWeightAp => weighted::one_weight_ap(cfg),
        ExperimentId::DyadicAudit => audit::dyadic_audit(cfg),
        ExperimentId::LpOracle => suites::lp_oracle(cfg),
        ExperimentId::FunctionalProperties => suites::functional_properties(cfg),
        ExperimentId::ClosedForms => suites::closed_forms(cfg),
        ExperimentId::Muckenhoupt => suites::muckenhoupt(cfg),
        ExperimentId::CzSuite => suites::cz_suite(cfg),
    }
}

/// `max/min` of a list of non-negative values; 1 when all vanish and `+∞`
/// when only some do.
pub fn variation(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `sup_λ λ (w{g > λ})^{1/p}` over the `λ` chosen by `grid`; each `λ` is
/// approached from below, so a value `λ = g_i` counts `w{g ≥ g_i}`.
pub fn lambda_sup(space: &MetricMeasureSpace, g: &GridFunction, w: &GridFunction, p: f64, grid: &LambdaGrid) -> f64 {
    match grid {
        LambdaGrid::Realized => weak_sup(space, g, w, p),
        LambdaGrid::Quantiles { count } => {
            let mut values: Vec<f64> = g.values().iter().copied().filter(|v| *v > 0.0).collect();
            if values.is_empty() {
                return 0.0;
            }
            values.sort_by(f64::total_cmp);
            let last = values.len() - 1;
            (0..*count)
                .map(|j| {
                    let idx = if *count == 1 { last } else { j * last / (count - 1) };
                    let lambda = values[idx];
                    let mass: f64 = (0..space.len())
                        .filter(|&x| g[x] >= lambda)
                        .map(|x| w[x] * space.mass(x))
                        .sum();
                    lambda * mass.powf(1.0 / p)
                })
                .fold(0.0, f64::max)
        }
    }
}
