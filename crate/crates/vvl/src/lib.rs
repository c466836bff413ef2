//! Command-line harness for `vvl-core`: configuration files, sweep
//! orchestration, `VVL1` snapshots, CSV/JSON reports, SVG plots and run
//! manifests.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod snapshot;

pub use commands::{execute, Command, HarnessError, Outcome};
pub use config::{Config, ConfigError};
