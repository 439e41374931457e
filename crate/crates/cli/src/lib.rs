//! Batch front end: configuration, presets, CSV/SVG output and mode pipelines.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{emit_config, parse_config, ExperimentConfig, Mode};
pub use error::CliError;
pub use presets::FigurePreset;
pub use run::{run_config, run_preset, Artifacts};
