//! Layered run configuration: preset, then config file, then command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rdkf_core::dkf::BarMatrix;
use rdkf_core::harness::{ExperimentConfig, FilterConfig};
use rdkf_core::model::ProjectileParams;
use rdkf_core::world::WorldConfig;

use crate::error::{CliError, Result};
use crate::manifest::ManifestInfo;

pub const PRESETS: [&str; 3] = ["paper", "paper-fig1", "smoke"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// Per-tick trigger and risk-parameter log of run 0.
    pub event_log: bool,
    /// State and output trace of run 0.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(alias = "T")]
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub bar_matrix: BarMatrix,
    pub scenario: ProjectileParams,
    pub world: WorldConfig,
    pub filter: FilterConfig,
    pub outputs: OutputOptions,
    /// Variants run by `compare`; empty means the RDKF/DKF1/DKF2 triple.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<FilterConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            preset: None,
            horizon: base.horizon,
            runs: base.runs,
            seed: base.seed,
            bar_matrix: base.bar_matrix,
            scenario: base.scenario,
            world: base.world,
            filter: base.filter,
            outputs: OutputOptions::default(),
            compare: Vec::new(),
            manifest: None,
        }
    }
}

pub fn preset(name: &str) -> Result<RunConfig> {
    match name {
        "paper" | "paper-fig1" => Ok(RunConfig::default()),
        "smoke" => Ok(RunConfig {
            horizon: 30,
            runs: 2,
            scenario: ProjectileParams {
                nodes: 12,
                sensors: 4,
                extra_edges: 24,
                ..Default::default()
            },
            ..Default::default()
        }),
        other => Err(CliError::UnknownPreset {
            name: other.to_string(),
            known: PRESETS.join(", "),
        }),
    }
}

/// Command-line overrides; `None` leaves the layered value in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub filter: Option<String>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub world: Option<String>,
    pub tilt: Option<String>,
    pub horizon: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
    pub sensors: Option<usize>,
    pub extra_edges: Option<usize>,
    pub bar_matrix: Option<BarMatrix>,
    pub event_log: bool,
    pub trace: bool,
}

impl Overrides {
    /// `b` sets both the filter tolerance and the world's divergence budget.
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = &self.filter {
            cfg.filter.variant = v.clone();
        }
        if let Some(b) = self.b {
            cfg.filter.b = b;
            cfg.world.b = b;
        }
        if let Some(v) = self.alpha {
            cfg.filter.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.filter.beta = v;
        }
        if let Some(v) = self.delta {
            cfg.filter.delta = v;
        }
        if let Some(v) = &self.world {
            cfg.world.kind = v.clone();
        }
        if let Some(v) = &self.tilt {
            cfg.world.tilt = v.clone();
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.nodes {
            cfg.scenario.nodes = v;
            cfg.scenario.extra_edges = 2 * v;
        }
        if let Some(v) = self.sensors {
            cfg.scenario.sensors = v;
        }
        if let Some(v) = self.extra_edges {
            cfg.scenario.extra_edges = v;
        }
        if let Some(v) = self.bar_matrix {
            cfg.bar_matrix = v;
        }
        cfg.outputs.event_log |= self.event_log;
        cfg.outputs.trace |= self.trace;
    }
}

fn merge(base: &mut toml::Table, layer: toml::Table) {
    for (key, value) in layer {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses a config file body, layering it on the named or embedded preset.
pub fn parse_config(text: &str, origin: &str, preset_override: Option<&str>) -> Result<RunConfig> {
    let config_error = |e: toml::de::Error| CliError::Config {
        path: origin.to_string(),
        message: e.to_string(),
    };
    let checked: RunConfig = toml::from_str(text).map_err(config_error)?;
    let mut layer: toml::Table = toml::from_str(text).map_err(config_error)?;
    layer.remove("manifest");
    layer.remove("preset");
    if let Some(t) = layer.remove("T") {
        layer.insert("horizon".into(), t);
    }
    let name = preset_override
        .map(str::to_string)
        .or(checked.preset)
        .unwrap_or_else(|| "paper".to_string());
    let base = preset(&name)?;
    let mut merged = toml::Table::try_from(&base).map_err(|e| CliError::Invalid(e.to_string()))?;
    merge(&mut merged, layer);
    let mut cfg: RunConfig = merged.try_into().map_err(config_error)?;
    cfg.preset = Some(name);
    Ok(cfg)
}

/// Preset, then optional config file, then flags; validated.
pub fn resolve(preset_name: Option<&str>, config: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            parse_config(&text, &path.display().to_string(), preset_name)?
        }
        None => {
            let name = preset_name.unwrap_or("paper");
            RunConfig {
                preset: Some(name.to_string()),
                ..preset(name)?
            }
        }
    };
    overrides.apply(&mut cfg);
    cfg.manifest = None;
    cfg.validate()?;
    Ok(cfg)
}

fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label != "."
        && label != ".."
        && label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "variant label `{label}` must be non-empty and use only letters, digits, `-`, `_` or `.`"
        )))
    }
}

impl RunConfig {
    pub fn experiment(&self, filter: &FilterConfig) -> ExperimentConfig {
        ExperimentConfig {
            scenario: self.scenario.clone(),
            world: self.world.clone(),
            filter: filter.clone(),
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            bar_matrix: self.bar_matrix,
        }
    }

    /// RDKF with the configured filter parameters, DKF1 with the same
    /// trigger, and DKF2 with `α = 0.01`.
    pub fn default_triple(&self) -> Vec<FilterConfig> {
        let f = &self.filter;
        vec![
            FilterConfig {
                variant: "rdkf".into(),
                label: Some("RDKF".into()),
                ..f.clone()
            },
            FilterConfig {
                variant: "dkf".into(),
                label: Some("DKF1".into()),
                ..f.clone()
            },
            FilterConfig {
                variant: "dkf".into(),
                label: Some("DKF2".into()),
                alpha: 0.01,
                ..f.clone()
            },
        ]
    }

    pub fn compare_filters(&self) -> Vec<FilterConfig> {
        if self.compare.is_empty() {
            self.default_triple()
        } else {
            self.compare.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: rdkf_core::Error| CliError::Invalid(e.to_string());
        self.experiment(&self.filter).validate().map_err(invalid)?;
        check_label(&self.filter.label())?;
        for f in &self.compare {
            self.experiment(f).validate().map_err(invalid)?;
            check_label(&f.label())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_on_full_scale_preset() {
        let cfg = parse_config("", "test.toml", Some("paper-fig1")).unwrap();
        assert_eq!(cfg.scenario.nodes, 100);
        assert_eq!(cfg.scenario.sensors, 20);
        assert_eq!(cfg.filter.b, 0.05);
        assert_eq!(cfg.filter.alpha, 30.0);
        assert_eq!(cfg.filter.beta, 0.2);
        assert_eq!(cfg.filter.delta, 0.1);
        assert_eq!(cfg.horizon, 300);
        assert_eq!(cfg.world.kind, "least-favorable");
    }

    #[test]
    fn alpha_override_gives_dkf2_trigger() {
        let overrides = Overrides {
            filter: Some("dkf".into()),
            alpha: Some(0.01),
            ..Default::default()
        };
        let cfg = resolve(Some("paper"), None, &overrides).unwrap();
        assert_eq!(cfg.filter.variant, "dkf");
        assert_eq!((cfg.filter.alpha, cfg.filter.beta, cfg.filter.delta), (0.01, 0.2, 0.1));
    }

    #[test]
    fn negative_tolerance_is_a_range_error() {
        let overrides = Overrides {
            b: Some(-1.0),
            ..Default::default()
        };
        let err = resolve(None, None, &overrides).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = parse_config("runs = 3\n[filter]\ngamma = 1.0\n", "bad.toml", None).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("bad.toml"), "{text}");
        assert!(text.contains("gamma"), "{text}");
        assert!(text.contains("line 3"), "{text}");
    }

    #[test]
    fn file_layers_over_preset() {
        let cfg = parse_config("preset = \"smoke\"\nruns = 5\n[filter]\nalpha = 2.0\n", "f.toml", None).unwrap();
        assert_eq!(cfg.runs, 5);
        assert_eq!(cfg.scenario.nodes, 12);
        assert_eq!(cfg.filter.alpha, 2.0);
        assert_eq!(cfg.filter.beta, 0.2);
        assert_eq!(cfg.preset.as_deref(), Some("smoke"));
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("fig9"), Err(CliError::UnknownPreset { .. })));
    }

    #[test]
    fn horizon_alias() {
        let cfg = parse_config("T = 12\n", "f.toml", Some("smoke")).unwrap();
        assert_eq!(cfg.horizon, 12);
    }

    #[test]
    fn triple_shares_trigger_except_alpha() {
        let cfg = RunConfig::default();
        let triple = cfg.default_triple();
        let labels: Vec<String> = triple.iter().map(FilterConfig::label).collect();
        assert_eq!(labels, ["RDKF", "DKF1", "DKF2"]);
        assert_eq!(triple[1].alpha, 30.0);
        assert_eq!(triple[2].alpha, 0.01);
    }

    #[test]
    fn node_override_scales_extra_edges() {
        let overrides = Overrides {
            nodes: Some(10),
            sensors: Some(3),
            ..Default::default()
        };
        let cfg = resolve(None, None, &overrides).unwrap();
        assert_eq!(cfg.scenario.extra_edges, 20);
    }

    #[test]
    fn bad_label_rejected() {
        let mut cfg = RunConfig::default();
        cfg.filter.label = Some("../x".into());
        assert!(cfg.validate().is_err());
    }
}
