//! Library side of the `deepsurrogate` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Verb};
pub use config::{defaults, Experiment, RunConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
