//! Scenario runner for the dense-coding simulator: config loading, the
//! measurement scenarios, and the run-directory writer.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

pub use config::{Figure, ScenarioConfig};
pub use error::CliError;
pub use output::{write_run, Format};
pub use scenario::{calibrate, run_fig2, run_fig3, run_fig4, sweep, Metrics, RunOutput};
