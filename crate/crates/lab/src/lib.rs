//! Experiment runner for `solitonlab`: presets, persistence, reports and plots.

pub mod analysis;
pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod store;

pub use config::{ExperimentConfig, PRESETS};
pub use error::{LabError, Result};
pub use run::{emit_outputs, report_experiment, resume_experiment, run_experiment, RunManifest, RunOptions};
