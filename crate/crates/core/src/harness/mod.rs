//! Experiment plumbing behind the command-line tool: configuration,
//! artifacts with manifests, reports and the acceptance suite.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{ConfigFile, ExperimentConfig, Kind, Route};
pub use manifest::{Check, ResultManifest};
pub use report::{report, Report};
pub use run::run;
