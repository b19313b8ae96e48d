//! Command-line driver for the `pseudosphere` library: configuration, CSV
//! and OBJ formats, the JSON report and the end-to-end run.

pub mod config;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod report;

pub use config::{Cli, PresetKind, RunConfig};
pub use pipeline::{run_pipeline, RunOutcome};
