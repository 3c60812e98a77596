//! Experiment harness for the intrinsic square function library: presets,
//! seeded draws, reports and the experiment runners.

pub mod config;
pub mod draws;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{ExperimentConfig, ExperimentId};
pub use error::{LabError, Result};
pub use experiments::run;
pub use report::Report;
