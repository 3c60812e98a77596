//! Machine-readable experiment reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::Result;
use crate::fit::LinearFit;

/// One measurement row; `values` keys become CSV columns in long format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub trial: usize,
    pub label: String,
    pub values: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(trial: usize, label: impl Into<String>) -> Self {
        Self {
            trial,
            label: label.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: Option<LinearFit>,
    pub target: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Within,
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    /// Limit for `AtMost`/`AtLeast`, target for `Within`.
    pub threshold: f64,
    /// Tolerance for `Within`.
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            threshold: limit,
            tolerance: 0.0,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            threshold: limit,
            tolerance: 0.0,
            pass: value >= limit,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Within,
            threshold: target,
            tolerance,
            pass: (value - target).abs() <= tolerance,
        }
    }

    /// A boolean check; `value` carries a count of offending cases.
    pub fn holds(name: impl Into<String>, offending: usize) -> Self {
        Self {
            name: name.into(),
            value: offending as f64,
            relation: Relation::Holds,
            threshold: 0.0,
            tolerance: 0.0,
            pass: offending == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: ExperimentId,
    /// Which norms and constants divide the measured quantities.
    pub normalization: String,
    pub rows: Vec<Row>,
    pub constants: BTreeMap<String, f64>,
    pub fits: Vec<NamedFit>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(config: &ExperimentConfig, normalization: impl Into<String>) -> Self {
        Self {
            experiment: config.experiment,
            normalization: normalization.into(),
            rows: Vec::new(),
            constants: BTreeMap::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            pass: true,
            provenance: Provenance {
                config: config.clone(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn fit(&mut self, name: &str, fit: Option<LinearFit>, target: Option<f64>) {
        self.fits.push(NamedFit {
            name: name.to_string(),
            fit,
            target,
        });
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Long-format rows `trial,label,key,value` in report order.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "label", "key", "value"])?;
        for row in &self.rows {
            for (k, v) in &row.values {
                w.write_record([row.trial.to_string(), row.label.clone(), k.clone(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One line per check, `PASS`/`FAIL` first.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let rel = match c.relation {
                Relation::AtMost => format!("<= {}", c.threshold),
                Relation::AtLeast => format!(">= {}", c.threshold),
                Relation::Within => format!("within {} of {}", c.tolerance, c.threshold),
                Relation::Holds => "no offending cases".to_string(),
            };
            s.push_str(&format!("{verdict} {}: {} ({rel})\n", c.name, c.value));
        }
        s
    }
}
