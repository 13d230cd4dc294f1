//! Command-line experiments for the `phasecal` toolkit: configuration, the
//! `CSIB` capture format, ground-truth sidecars and the experiment runners.

pub mod config;
pub mod csib;
mod error;
pub mod output;
pub mod runners;
pub mod sidecar;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
