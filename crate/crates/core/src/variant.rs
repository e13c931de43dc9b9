//! Filter variants run by the distributed engine, selected by name at runtime.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::robust::{Dynamics, InfoPair, RobustPrediction};

/// Event-trigger thresholds and prediction tolerance of a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub b: f64,
}

impl TriggerParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, b: f64) -> Result<Self> {
        let params = Self { alpha, beta, delta, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("delta", self.delta), ("b", self.b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite nonnegative number, got {v}")));
            }
        }
        Ok(())
    }

    /// `½[α + βn + n ln(1+δ)]`: divergence bound guaranteed for a silent node.
    pub fn kl_bound(&self, n: usize) -> f64 {
        let n = n as f64;
        0.5 * (self.alpha + self.beta * n + n * self.delta.ln_1p())
    }
}

/// A distributed filter: trigger thresholds plus the prediction rule used by
/// both the node chain and the bar chain.
pub trait FilterVariant: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn params(&self) -> TriggerParams;
    fn predict(&self, dynamics: &Dynamics, filt: &InfoPair, u: &Vector) -> Result<RobustPrediction>;
}

/// Robust distributed filter with tolerance `b`.
#[derive(Debug, Clone, Copy)]
pub struct Rdkf {
    params: TriggerParams,
}

impl Rdkf {
    pub fn new(params: TriggerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl FilterVariant for Rdkf {
    fn name(&self) -> &'static str {
        "rdkf"
    }

    fn params(&self) -> TriggerParams {
        self.params
    }

    fn predict(&self, dynamics: &Dynamics, filt: &InfoPair, u: &Vector) -> Result<RobustPrediction> {
        dynamics.robust_predict(filt, u, self.params.b)
    }
}

/// Event-triggered distributed Kalman filter without robustification.
#[derive(Debug, Clone, Copy)]
pub struct Dkf {
    params: TriggerParams,
}

impl Dkf {
    /// The tolerance in `params` is ignored and reported as zero.
    pub fn new(params: TriggerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: TriggerParams { b: 0.0, ..params },
        })
    }
}

impl FilterVariant for Dkf {
    fn name(&self) -> &'static str {
        "dkf"
    }

    fn params(&self) -> TriggerParams {
        self.params
    }

    fn predict(&self, dynamics: &Dynamics, filt: &InfoPair, u: &Vector) -> Result<RobustPrediction> {
        dynamics.nominal_predict(filt, u)
    }
}

type VariantFactory = fn(TriggerParams) -> Result<Arc<dyn FilterVariant>>;

const VARIANTS: [(&str, VariantFactory); 2] = [
    ("rdkf", |p| Ok(Arc::new(Rdkf::new(p)?))),
    ("dkf", |p| Ok(Arc::new(Dkf::new(p)?))),
];

pub fn variant_names() -> Vec<&'static str> {
    VARIANTS.iter().map(|(name, _)| *name).collect()
}

/// Looks up a variant by registered name.
pub fn filter_variant(name: &str, params: TriggerParams) -> Result<Arc<dyn FilterVariant>> {
    let (_, factory) = VARIANTS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "filter variant",
            name: name.to_string(),
            known: variant_names().join(", "),
        })?;
    factory(params)
}
