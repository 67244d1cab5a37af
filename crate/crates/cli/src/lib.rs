//! Experiment runner: TOML configuration, the experiment kinds, and CSV /
//! manifest output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod table;

pub use config::{ConfigError, ExperimentKind, ExperimentSpec};
pub use experiments::{run_experiment, RunError, RunOutput};
pub use output::{run_to_dir, write_failure, Manifest};
