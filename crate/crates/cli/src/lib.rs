//! Command-line front end for `fracpx`: TOML experiment configs, the `norm`,
//! `solve`, `degiorgi` and `suite` commands, and their JSON/CSV artifacts.

pub mod commands;
pub mod config;
pub mod suite;

pub use commands::{cmd_degiorgi, cmd_norm, cmd_solve, CliError, Context, Outcome};
pub use config::{Config, ConfigError};
pub use suite::{cmd_suite, SuiteSummary};

/// The bundled default experiment.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");
