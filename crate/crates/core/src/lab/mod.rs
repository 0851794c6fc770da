//! Configuration, experiment suites and report files.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentId};
pub use experiments::{epsilon_nondegeneracy_check, run_experiment};
pub use report::{emit_report, ExperimentOutcome, RatioTable};
