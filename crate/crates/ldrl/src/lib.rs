//! Experiment runner around `ldrl-core`: model files, configuration, the
//! `ldrl` subcommands and their CSV/JSON artifacts.

// `!(x > 0.0)` is the NaN-rejecting form, used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod model_io;
pub mod output;
pub mod problem;

pub use commands::{run, Command, Outcome};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

/// Caps the global worker pool at `LDRL_THREADS` when it is set.
pub fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("LDRL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("LDRL_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}
