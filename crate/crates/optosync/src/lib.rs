//! Batch front end for the two-system optomechanical synchronization
//! toolkit: configuration, parallel sweeps, CSV/JSON export, SVG figures
//! and the scenario runner behind the `optosync` binary.

pub mod config;
pub mod export;
pub mod parallel;
pub mod scenarios;
pub mod svg;

pub use config::{ConfigError, RunConfig, Scenario};
pub use optosync_core;
pub use scenarios::{run, Manifest, Outcome};
