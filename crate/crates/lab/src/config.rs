//! Experiment configuration. Every experiment has a preset; a JSON config
//! only needs the fields it overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use homog_core::intrinsic::{Boundary, TestClass};
use homog_core::{MetricMeasureSpace, Modulus};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config_error, LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    L2Aperture,
    Weak11,
    SparseDom,
    ApertureOptimality,
    TwoWeightLog,
    OneWeightAp,
    DyadicAudit,
    LpOracle,
    FunctionalProperties,
    ClosedForms,
    Muckenhoupt,
    CzSuite,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        ExperimentId::L2Aperture,
        ExperimentId::Weak11,
        ExperimentId::SparseDom,
        ExperimentId::ApertureOptimality,
        ExperimentId::TwoWeightLog,
        ExperimentId::OneWeightAp,
        ExperimentId::DyadicAudit,
        ExperimentId::LpOracle,
        ExperimentId::FunctionalProperties,
        ExperimentId::ClosedForms,
        ExperimentId::Muckenhoupt,
        ExperimentId::CzSuite,
    ];

    pub fn name(self) -> String {
        match serde_json::to_value(self) {
            Ok(Value::String(s)) => s,
            _ => unreachable!("unit variants serialize as strings"),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| config_error(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceSpec {
    Grid { d: usize, n: usize, h: f64 },
    File { path: PathBuf },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<MetricMeasureSpace> {
        Ok(match self {
            SpaceSpec::Grid { d, n, h } => MetricMeasureSpace::euclidean_grid(*d, *n, *h)?,
            SpaceSpec::File { path } => MetricMeasureSpace::load(path)?,
        })
    }
}

/// How the `λ` values of weak-norm suprema are chosen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaGrid {
    /// Every value of the function (exact supremum).
    #[default]
    Realized,
    /// `count` evenly spaced quantiles of the positive values.
    Quantiles { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub space: SpaceSpec,
    /// Modulus spec, e.g. `power:1` or `scale:2:power:0.5`.
    pub omega: String,
    pub phi: f64,
    pub kappa: f64,
    pub boundary: Boundary,
    pub betas: Vec<f64>,
    pub p: f64,
    pub alphas: Vec<f64>,
    pub eta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub lambda_grid: LambdaGrid,
    pub trials: usize,
    pub seed: u64,
    pub heavy_tailed: bool,
    /// `C` of the ball averages and of the cube dilates (sparse domination).
    pub dilation: f64,
    /// Targets `r'` of the reverse Hölder families.
    pub r_primes: Vec<f64>,
    /// Main pass threshold: a variation factor, slope tolerance or
    /// comparison tolerance depending on the experiment.
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn preset(id: ExperimentId) -> Self {
        let base = Self {
            experiment: id,
            space: SpaceSpec::Grid { d: 1, n: 256, h: 1.0 },
            omega: "power:1".into(),
            phi: 1.0,
            kappa: 2.0,
            boundary: Boundary::Pinned,
            betas: vec![1.0, 2.0, 4.0, 8.0],
            p: 2.0,
            alphas: vec![],
            eta: 0.5,
            k_min: 0,
            k_max: 8,
            lambda_grid: LambdaGrid::Realized,
            trials: 50,
            seed: 20170301,
            heavy_tailed: false,
            dilation: 3.0,
            r_primes: vec![],
            threshold: 2.0,
            out: None,
            csv: None,
        };
        match id {
            ExperimentId::L2Aperture => base,
            ExperimentId::Weak11 => Self {
                betas: vec![1.0, 2.0, 4.0, 8.0, 16.0],
                ..base
            },
            ExperimentId::SparseDom => Self {
                space: SpaceSpec::Grid { d: 1, n: 128, h: 1.0 },
                betas: vec![2.0],
                k_min: 0,
                k_max: 7,
                trials: 20,
                threshold: 1.0,
                ..base
            },
            ExperimentId::ApertureOptimality => Self {
                space: SpaceSpec::Grid { d: 1, n: 4096, h: 1.0 },
                betas: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                alphas: vec![0.5, 0.9],
                k_min: 0,
                k_max: 7,
                trials: 1,
                threshold: 0.3,
                ..base
            },
            ExperimentId::TwoWeightLog => Self {
                space: SpaceSpec::Grid { d: 1, n: 1024, h: 1.0 },
                k_min: 0,
                k_max: 10,
                r_primes: (1..=10).map(|j| 2f64.powi(j)).collect(),
                trials: 1,
                threshold: 4.0,
                ..base
            },
            ExperimentId::OneWeightAp => Self {
                space: SpaceSpec::Grid { d: 1, n: 128, h: 1.0 },
                betas: vec![1.0, 2.0],
                alphas: vec![-0.5, 0.0, 0.5, 0.9],
                k_min: 0,
                k_max: 7,
                trials: 4,
                threshold: 0.0,
                ..base
            },
            ExperimentId::DyadicAudit => Self {
                trials: 100,
                threshold: 0.0,
                ..base
            },
            ExperimentId::LpOracle => Self {
                trials: 50,
                threshold: 1e-9,
                ..base
            },
            ExperimentId::FunctionalProperties => Self {
                trials: 1000,
                threshold: 1e-9,
                ..base
            },
            ExperimentId::ClosedForms => Self {
                trials: 1,
                threshold: 1e-5,
                ..base
            },
            ExperimentId::Muckenhoupt => Self {
                trials: 500,
                threshold: 1e-9,
                ..base
            },
            ExperimentId::CzSuite => Self {
                space: SpaceSpec::Grid { d: 1, n: 64, h: 1.0 },
                k_min: 0,
                k_max: 6,
                trials: 500,
                threshold: 2.0,
                ..base
            },
        }
    }

    /// The preset of the experiment named in `json` (or `fallback`) with the
    /// fields of `json` layered on top.
    pub fn from_json(json: &str, fallback: Option<ExperimentId>) -> Result<Self> {
        let user: Value = serde_json::from_str(json)?;
        let Value::Object(fields) = user else {
            return Err(config_error("config must be a JSON object"));
        };
        let id = match (fields.get("experiment"), fallback) {
            (Some(v), fallback) => {
                let id: ExperimentId = serde_json::from_value(v.clone())
                    .map_err(|_| config_error(format!("unknown experiment {v}")))?;
                if fallback.is_some_and(|f| f != id) {
                    return Err(config_error(format!(
                        "config is for '{id}' but '{}' was requested",
                        fallback.unwrap()
                    )));
                }
                id
            }
            (None, Some(f)) => f,
            (None, None) => return Err(config_error("config does not name an experiment")),
        };
        let Value::Object(mut merged) = serde_json::to_value(Self::preset(id))? else {
            unreachable!("config serializes as an object");
        };
        for (k, v) in fields {
            if !merged.contains_key(&k) && k != "out" && k != "csv" {
                return Err(config_error(format!("unknown config field '{k}'")));
            }
            merged.insert(k, v);
        }
        let cfg: Self = serde_json::from_value(Value::Object(merged))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, fallback: Option<ExperimentId>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, fallback)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_error("trials must be positive"));
        }
        if self.k_min > self.k_max {
            return Err(config_error(format!("empty scale range [{}, {}]", self.k_min, self.k_max)));
        }
        if !(self.kappa > 1.0) {
            return Err(config_error("kappa must exceed 1"));
        }
        if !(self.phi >= 0.0) {
            return Err(config_error("phi must be non-negative"));
        }
        if self.betas.iter().any(|b| !(*b >= 1.0)) {
            return Err(config_error("every beta must be >= 1"));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(config_error("p must lie in (1,∞)"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(config_error("eta must lie in (0,1)"));
        }
        if !(self.dilation > 0.0) {
            return Err(config_error("dilation must be positive"));
        }
        if self.r_primes.iter().any(|r| !(*r > 1.0)) {
            return Err(config_error("every target r' must exceed 1"));
        }
        if let LambdaGrid::Quantiles { count } = self.lambda_grid {
            if count == 0 {
                return Err(config_error("quantile lambda grid needs at least one value"));
            }
        }
        Modulus::parse(&self.omega)?;
        Ok(())
    }

    pub fn modulus(&self) -> Result<Modulus> {
        Ok(Modulus::parse(&self.omega)?)
    }

    pub fn test_class(&self) -> Result<TestClass> {
        Ok(TestClass::new(self.modulus()?, self.phi, self.kappa)?.with_boundary(self.boundary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
            ExperimentConfig::preset(id).validate().unwrap();
        }
        assert_eq!(ExperimentId::Weak11.name(), "weak11");
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn overrides_layer_on_preset() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment":"weak11","trials":3}"#, None).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.betas, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        let cfg = ExperimentConfig::from_json(r#"{"seed":7}"#, Some(ExperimentId::SparseDom)).unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#, Some(ExperimentId::Weak11)).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"weak11"}"#, Some(ExperimentId::SparseDom)).is_err());
        assert!(ExperimentConfig::from_json(r#"{"trials":0}"#, Some(ExperimentId::Weak11)).is_err());
    }
}
