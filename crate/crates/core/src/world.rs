//! Data-generating worlds, registered by name and selected at runtime.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfsim::{self, LeastFavorablePlan, Trajectory};
use crate::model::NominalModel;

pub trait World: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn horizon(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Trajectory>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub kind: String,
    /// Divergence budget of the least-favorable tilt.
    pub b: f64,
    /// Tilt policy of the least-favorable world.
    pub tilt: String,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            kind: "least-favorable".into(),
            b: 0.05,
            tilt: "saturating".into(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "world b must be a finite nonnegative number, got {}",
                self.b
            )));
        }
        if !world_names().contains(&self.kind.as_str()) {
            return Err(unknown_world(&self.kind));
        }
        lfsim::tilt_policy(&self.tilt)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NominalWorld {
    model: NominalModel,
    horizon: usize,
}

impl World for NominalWorld {
    fn name(&self) -> &'static str {
        "nominal"
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Trajectory> {
        lfsim::sample_nominal_with(&self.model, self.horizon, rng)
    }
}

#[derive(Debug, Clone)]
pub struct LeastFavorableWorld {
    plan: LeastFavorablePlan,
}

impl LeastFavorableWorld {
    pub fn plan(&self) -> &LeastFavorablePlan {
        &self.plan
    }
}

impl World for LeastFavorableWorld {
    fn name(&self) -> &'static str {
        "least-favorable"
    }

    fn horizon(&self) -> usize {
        self.plan.horizon()
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Trajectory> {
        Ok(self.plan.sample(rng)?.0)
    }
}

type WorldFactory = fn(&WorldConfig, &NominalModel, usize) -> Result<Arc<dyn World>>;

const WORLDS: [(&str, WorldFactory); 2] = [
    ("nominal", |_, model, horizon| {
        Ok(Arc::new(NominalWorld {
            model: model.clone(),
            horizon,
        }))
    }),
    ("least-favorable", |cfg, model, horizon| {
        let policy = lfsim::tilt_policy(&cfg.tilt)?;
        Ok(Arc::new(LeastFavorableWorld {
            plan: LeastFavorablePlan::new(model, cfg.b, horizon, policy.as_ref())?,
        }))
    }),
];

pub fn world_names() -> Vec<&'static str> {
    WORLDS.iter().map(|(n, _)| *n).collect()
}

fn unknown_world(name: &str) -> Error {
    Error::UnknownStrategy {
        kind: "world",
        name: name.to_string(),
        known: world_names().join(", "),
    }
}

/// Builds the world named by `cfg.kind` over `horizon` transitions.
pub fn build_world(cfg: &WorldConfig, model: &NominalModel, horizon: usize) -> Result<Arc<dyn World>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    cfg.validate()?;
    let (_, factory) = WORLDS
        .iter()
        .find(|(n, _)| *n == cfg.kind)
        .ok_or_else(|| unknown_world(&cfg.kind))?;
    factory(cfg, model, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_projectile_scenario, ProjectileParams};
    use crate::seeding::run_rng;

    #[test]
    fn registry() {
        let (model, _) = build_projectile_scenario(&ProjectileParams {
            nodes: 6,
            sensors: 3,
            extra_edges: 4,
            ..Default::default()
        })
        .unwrap();
        let nominal = WorldConfig {
            kind: "nominal".into(),
            ..Default::default()
        };
        let w = build_world(&nominal, &model, 5).unwrap();
        assert_eq!(w.name(), "nominal");
        assert_eq!(w.sample(&mut run_rng(1, 0)).unwrap().horizon(), 5);
        let lf = build_world(&WorldConfig::default(), &model, 5).unwrap();
        assert_eq!(lf.horizon(), 5);
        let bad = WorldConfig {
            kind: "adversarial".into(),
            ..Default::default()
        };
        assert!(matches!(build_world(&bad, &model, 5), Err(Error::UnknownStrategy { .. })));
        let bad_tilt = WorldConfig {
            tilt: "max".into(),
            ..Default::default()
        };
        assert!(build_world(&bad_tilt, &model, 5).is_err());
    }

    #[test]
    fn zero_budget_world_matches_nominal() {
        let (model, _) = build_projectile_scenario(&ProjectileParams {
            nodes: 6,
            sensors: 3,
            extra_edges: 4,
            ..Default::default()
        })
        .unwrap();
        let lf = build_world(
            &WorldConfig {
                b: 0.0,
                ..Default::default()
            },
            &model,
            20,
        )
        .unwrap();
        let nominal = build_world(
            &WorldConfig {
                kind: "nominal".into(),
                ..Default::default()
            },
            &model,
            20,
        )
        .unwrap();
        assert_eq!(
            lf.sample(&mut run_rng(3, 7)).unwrap(),
            nominal.sample(&mut run_rng(3, 7)).unwrap()
        );
    }
}
