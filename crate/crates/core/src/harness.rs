//! Monte-Carlo experiment driver and metric aggregation.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dkf::{BarMatrix, Engine, EngineOptions, EventRecord};
use crate::error::{Error, Result};
use crate::lfsim::format_float;
use crate::model::{build_projectile_scenario, Network, NominalModel, ProjectileParams};
use crate::seeding;
use crate::variant::{filter_variant, FilterVariant, TriggerParams};
use crate::world::{build_world, World, WorldConfig};

/// Run `r` draws its world from stream `WORLD_STREAM_OFFSET + r`, away from the
/// streams used to build the scenario.
pub const WORLD_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub variant: String,
    /// Row label in outputs; defaults to the variant name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub b: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            variant: "rdkf".into(),
            label: None,
            alpha: 30.0,
            beta: 0.2,
            delta: 0.1,
            b: 0.05,
        }
    }
}

impl FilterConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.variant.clone())
    }

    pub fn params(&self) -> Result<TriggerParams> {
        TriggerParams::new(self.alpha, self.beta, self.delta, self.b)
    }

    pub fn build(&self) -> Result<Arc<dyn FilterVariant>> {
        filter_variant(&self.variant, self.params()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ProjectileParams,
    pub world: WorldConfig,
    pub filter: FilterConfig,
    /// Last tick index; ticks run over `0..=horizon`.
    #[serde(alias = "T")]
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub bar_matrix: BarMatrix,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ProjectileParams::default(),
            world: WorldConfig::default(),
            filter: FilterConfig::default(),
            horizon: 300,
            runs: 20,
            seed: 1,
            bar_matrix: BarMatrix::Deflated,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if self.scenario.nodes == 0 {
            return Err(Error::InvalidArgument("nodes must be at least 1".into()));
        }
        if self.scenario.sensors > self.scenario.nodes {
            return Err(Error::InvalidArgument(format!(
                "{} sensors requested on {} nodes",
                self.scenario.sensors, self.scenario.nodes
            )));
        }
        if !(self.scenario.noise_scale > 0.0 && self.scenario.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be positive, got {}",
                self.scenario.noise_scale
            )));
        }
        self.world.validate()?;
        self.filter.build()?;
        Ok(())
    }
}

/// Per-run or run-averaged metrics. Series are indexed by tick `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `(1/N)Σᵢ‖x_t − x^i_{t|t}‖²`
    pub avg_sq_err: Vec<f64>,
    /// `(1/T)Σ_{t=1..T}‖x_t − x^i_{t|t}‖²`
    pub per_node: Vec<f64>,
    pub rate: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_bar: Vec<f64>,
}

fn mean_over_ticks(series: &[f64]) -> f64 {
    let tail = &series[1.min(series.len())..];
    if tail.is_empty() {
        return series.iter().sum::<f64>() / series.len().max(1) as f64;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

impl Metrics {
    /// Averages over ticks `1..=T`.
    pub fn mean_avg_sq_err(&self) -> f64 {
        mean_over_ticks(&self.avg_sq_err)
    }

    pub fn mean_rate(&self) -> f64 {
        mean_over_ticks(&self.rate)
    }

    pub fn mean_theta(&self) -> f64 {
        mean_over_ticks(&self.theta)
    }

    pub fn mean_theta_bar(&self) -> f64 {
        mean_over_ticks(&self.theta_bar)
    }

    /// Element-wise mean, reduced in slice order.
    pub fn average(runs: &[Metrics]) -> Result<Metrics> {
        let first = runs
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot average zero runs".into()))?;
        let avg = |get: fn(&Metrics) -> &Vec<f64>| -> Vec<f64> {
            let mut acc = vec![0.0; get(first).len()];
            for m in runs {
                for (a, v) in acc.iter_mut().zip(get(m)) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / runs.len() as f64).collect()
        };
        Ok(Metrics {
            avg_sq_err: avg(|m| &m.avg_sq_err),
            per_node: avg(|m| &m.per_node),
            rate: avg(|m| &m.rate),
            theta: avg(|m| &m.theta),
            theta_bar: avg(|m| &m.theta_bar),
        })
    }
}

/// Scenario, world and filter built once and shared by all runs.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    model: NominalModel,
    net: Network,
    world: Arc<dyn World>,
    variant: Arc<dyn FilterVariant>,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (model, net) = build_projectile_scenario(&config.scenario)?;
        let world = build_world(&config.world, &model, config.horizon + 1)?;
        Self::with_world(config, model, net, world)
    }

    /// Reuses an existing world so several filters see the same trajectories.
    pub fn with_world(config: &ExperimentConfig, model: NominalModel, net: Network, world: Arc<dyn World>) -> Result<Self> {
        config.validate()?;
        if world.horizon() != config.horizon + 1 {
            return Err(Error::InvalidArgument(format!(
                "world covers {} transitions, experiment needs {}",
                world.horizon(),
                config.horizon + 1
            )));
        }
        Ok(Self {
            variant: config.filter.build()?,
            config: config.clone(),
            model,
            net,
            world,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self) -> &NominalModel {
        &self.model
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn world(&self) -> &Arc<dyn World> {
        &self.world
    }

    pub fn variant(&self) -> &Arc<dyn FilterVariant> {
        &self.variant
    }

    pub fn engine(&self, options: EngineOptions) -> Result<Engine> {
        Engine::new(&self.model, &self.net, self.variant.clone(), options)
    }

    pub fn trajectory(&self, run_index: usize) -> Result<crate::lfsim::Trajectory> {
        let mut rng = seeding::run_rng(self.config.seed, WORLD_STREAM_OFFSET + run_index as u64);
        self.world.sample(&mut rng)
    }

    pub fn run(&self, run_index: usize) -> Result<Metrics> {
        Ok(self.run_with(run_index, false)?.0)
    }

    /// Like [`Experiment::run`] but also returns the per-tick event log.
    pub fn run_logged(&self, run_index: usize) -> Result<(Metrics, Vec<EventRecord>)> {
        self.run_with(run_index, true)
    }

    fn run_with(&self, run_index: usize, log_events: bool) -> Result<(Metrics, Vec<EventRecord>)> {
        let traj = self.trajectory(run_index)?;
        let mut engine = self.engine(EngineOptions {
            bar_matrix: self.config.bar_matrix,
            log_events,
            ..Default::default()
        })?;
        let n_nodes = self.net.node_count();
        let ticks = self.config.horizon + 1;
        let mut metrics = Metrics {
            avg_sq_err: Vec::with_capacity(ticks),
            per_node: vec![0.0; n_nodes],
            rate: Vec::with_capacity(ticks),
            theta: Vec::with_capacity(ticks),
            theta_bar: Vec::with_capacity(ticks),
        };
        for t in 0..ticks {
            let y = engine.split_measurements(&traj.outputs[t])?;
            let report = engine.step_network(&y)?;
            let mut total = 0.0;
            for (i, state) in engine.states().iter().enumerate() {
                let err = (&traj.states[t] - state.filt.mean()?).norm_squared();
                total += err;
                if t >= 1 {
                    metrics.per_node[i] += err;
                }
            }
            let nf = n_nodes as f64;
            metrics.avg_sq_err.push(total / nf);
            metrics.rate.push(report.rate());
            metrics.theta.push(engine.states().iter().map(|s| s.theta).sum::<f64>() / nf);
            metrics
                .theta_bar
                .push(engine.states().iter().map(|s| s.theta_bar()).sum::<f64>() / nf);
        }
        let denom = self.config.horizon as f64;
        for v in &mut metrics.per_node {
            *v /= denom;
        }
        Ok((metrics, engine.events().to_vec()))
    }

    pub fn run_all(&self) -> Result<ExperimentResult> {
        let runs = (0..self.config.runs)
            .into_par_iter()
            .map(|r| self.run(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResult {
            label: self.config.filter.label(),
            mean: Metrics::average(&runs)?,
            runs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub label: String,
    pub mean: Metrics,
    pub runs: Vec<Metrics>,
}

pub fn run_single(config: &ExperimentConfig, run_index: usize) -> Result<Metrics> {
    Experiment::prepare(config)?.run(run_index)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    Experiment::prepare(config)?.run_all()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mean_avg_sq_err: f64,
    pub mean_rate: f64,
    pub mean_theta: f64,
    pub mean_theta_bar: f64,
}

impl ComparisonRow {
    fn from_result(r: &ExperimentResult) -> Self {
        Self {
            label: r.label.clone(),
            mean_avg_sq_err: r.mean.mean_avg_sq_err(),
            mean_rate: r.mean.mean_rate(),
            mean_theta: r.mean.mean_theta(),
            mean_theta_bar: r.mean.mean_theta_bar(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub results: Vec<ExperimentResult>,
}

/// Runs every config against one shared world so the comparison is paired.
pub fn compare_variants(configs: &[ExperimentConfig]) -> Result<Comparison> {
    let first = configs
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to compare".into()))?;
    for c in &configs[1..] {
        if c.scenario != first.scenario
            || c.world != first.world
            || c.horizon != first.horizon
            || c.runs != first.runs
            || c.seed != first.seed
        {
            return Err(Error::InvalidArgument(format!(
                "variant `{}` does not share scenario, world, T, runs and seed with `{}`",
                c.filter.label(),
                first.filter.label()
            )));
        }
    }
    let mut labels: Vec<String> = configs.iter().map(|c| c.filter.label()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != configs.len() {
        return Err(Error::InvalidArgument("variant labels must be distinct".into()));
    }
    let base = Experiment::prepare(first)?;
    let results = configs
        .iter()
        .map(|c| {
            Experiment::with_world(c, base.model.clone(), base.net.clone(), base.world.clone())?.run_all()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        rows: results.iter().map(ComparisonRow::from_result).collect(),
        results,
    })
}

/// `series.csv`: one row per run and tick, plus `run = mean` rows.
pub fn write_series<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variant", "run", "t", "avg_sq_err", "sqrt_avg_sq_err", "rate", "theta", "theta_bar"])?;
    for r in results {
        let blocks = r
            .runs
            .iter()
            .enumerate()
            .map(|(k, m)| (k.to_string(), m))
            .chain(std::iter::once(("mean".to_string(), &r.mean)));
        for (run, m) in blocks {
            for t in 0..m.avg_sq_err.len() {
                w.write_record([
                    r.label.clone(),
                    run.clone(),
                    t.to_string(),
                    format_float(m.avg_sq_err[t]),
                    format_float(m.avg_sq_err[t].sqrt()),
                    format_float(m.rate[t]),
                    format_float(m.theta[t]),
                    format_float(m.theta_bar[t]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `per_node.csv`: run-averaged per-node errors.
pub fn write_per_node<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variant", "node", "avg_sq_err_i", "sqrt_avg_sq_err_i"])?;
    for r in results {
        for (i, v) in r.mean.per_node.iter().enumerate() {
            w.write_record([r.label.clone(), i.to_string(), format_float(*v), format_float(v.sqrt())])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `summary.csv`: one row per variant.
pub fn write_summary<W: Write>(rows: &[ComparisonRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "variant",
        "mean_avg_sq_err",
        "sqrt_mean_avg_sq_err",
        "mean_rate",
        "mean_theta",
        "mean_theta_bar",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            format_float(r.mean_avg_sq_err),
            format_float(r.mean_avg_sq_err.sqrt()),
            format_float(r.mean_rate),
            format_float(r.mean_theta),
            format_float(r.mean_theta_bar),
        ])?;
    }
    w.flush()?;
    Ok(())
}
