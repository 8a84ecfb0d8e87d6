//! Configuration parsing, the `ks` subcommands and their CSV/SVG/text
//! outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod svg;
pub mod verify;

pub use commands::{cmd_evolve, cmd_steady, cmd_sweep};
pub use config::{parse_config, RunConfig};
pub use error::{CliError, ConfigError};
pub use verify::cmd_verify;
