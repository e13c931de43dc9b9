//! Command-line driver: layered configuration, staged outputs and figures.

pub mod app;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod plot;
pub mod svg;

pub use app::{run, Cli, Command};
pub use error::{CliError, Result};
