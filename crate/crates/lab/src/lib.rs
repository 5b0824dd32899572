//! File formats, configuration, parallel sweeps and the command-line
//! surface on top of `cascade-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod graph_file;
pub mod parallel;
pub mod tables;

pub use cascade_core;
pub use config::RunConfig;
pub use error::{LabError, LabResult, EXIT_CONFIG, EXIT_NUMERICAL};
