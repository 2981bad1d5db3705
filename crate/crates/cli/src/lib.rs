//! Config-driven runner for `fkpp-core`: TOML in, CSV/JSON artifacts out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;
pub mod tasks;

pub use config::{parse_config, ConfigError, RunConfig, TaskKind};
pub use error::{ErrorRecord, RunError};
pub use run::{execute, RunOptions};
