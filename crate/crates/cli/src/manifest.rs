//! Run manifest: the fully resolved config plus provenance of the outputs.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub timestamp: String,
    /// Files of the output directory, relative to it.
    pub layout: Vec<String>,
}

impl ManifestInfo {
    pub fn new(command: &str, layout: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            layout,
        }
    }
}

/// Manifest text. The result is itself a valid config file that reproduces the run.
pub fn render(cfg: &RunConfig, info: ManifestInfo) -> Result<String> {
    let manifest = RunConfig {
        preset: None,
        manifest: Some(info),
        ..cfg.clone()
    };
    toml::to_string(&manifest).map_err(|e| CliError::Invalid(format!("cannot serialize manifest: {e}")))
}
