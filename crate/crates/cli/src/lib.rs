//! The `semiloc` command-line tool: presets, the config-driven runner and
//! CSV/JSON emission.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod presets;

pub use config::{load_config, ExperimentConfig, Scale};
pub use error::CliError;
pub use experiments::{run, RunOutput};
pub use presets::{preset, PRESET_NAMES};
