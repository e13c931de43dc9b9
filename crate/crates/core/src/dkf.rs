//! Event-triggered distributed filtering over a sensor network.
//!
//! Each tick runs four phases across all nodes: local correction, trigger
//! decision and broadcast, consensus fusion, and prediction of both the node
//! chain and the bar chain. A phase only reads the outputs of the previous one.
//!
//! The bar chain `(q̄, Ψ̄)` of node `i` is what its out-neighbors know about it.
//! Every receiver keeps its own replica of each in-neighbor's bar chain and
//! advances it from received broadcasts alone.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divergence;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::{consensus_weights, ConsensusWeights, Network, NominalModel};
use crate::robust::{Dynamics, InfoPair, RobustPrediction, SensorInfo};
use crate::variant::{FilterVariant, TriggerParams};

/// Which bar-chain matrix accompanies `q̄` in the trigger and the fusion fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarMatrix {
    /// `Ψ̄ = Ω̄ − θ̄I`, the matrix paired with `q̄`.
    #[default]
    Deflated,
    /// The undeflated `Ω̄`.
    Literal,
}

impl BarMatrix {
    pub fn name(self) -> &'static str {
        match self {
            BarMatrix::Deflated => "deflated",
            BarMatrix::Literal => "literal",
        }
    }
}

impl std::str::FromStr for BarMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deflated" => Ok(BarMatrix::Deflated),
            "literal" => Ok(BarMatrix::Literal),
            other => Err(Error::InvalidArgument(format!(
                "bar matrix must be `deflated` or `literal`, got `{other}`"
            ))),
        }
    }
}

/// The bar chain: `(q̄_t, Ψ̄_t)`, the undeflated `Ω̄_t` and the last `θ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarChain {
    pub pair: InfoPair,
    pub omega: Matrix,
    pub theta: f64,
}

impl BarChain {
    fn from_pair(pair: InfoPair) -> Self {
        Self {
            omega: pair.info.clone(),
            pair,
            theta: 0.0,
        }
    }

    /// `(q̄, M̄)` as seen by the trigger and the fusion fallback.
    pub fn view(&self, mode: BarMatrix) -> (&Vector, &Matrix) {
        match mode {
            BarMatrix::Deflated => (&self.pair.q, &self.pair.info),
            BarMatrix::Literal => (&self.pair.q, &self.omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// `(q_{t|t-1}, Ψ_{t|t-1})`
    pub pred: InfoPair,
    pub bar: BarChain,
    /// `(q_{t|t}, Ω_{t|t})` of the current tick.
    pub filt: InfoPair,
    /// `θ^i_t` of the last prediction.
    pub theta: f64,
    /// Ticks since the last transmission.
    pub n_since_tx: usize,
    pub is_sensor: bool,
}

impl NodeState {
    pub fn initial(prior: &InfoPair, is_sensor: bool) -> Self {
        Self {
            pred: prior.clone(),
            bar: BarChain::from_pair(prior.clone()),
            filt: prior.clone(),
            theta: 0.0,
            n_since_tx: 0,
            is_sensor,
        }
    }

    pub fn theta_bar(&self) -> f64 {
        self.bar.theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub sender: usize,
    pub pair: InfoPair,
}

/// Local correction: sensors fuse their measurement, other nodes pass the prediction through.
pub fn node_correct(state: &NodeState, y: Option<&Vector>, sensor: Option<&SensorInfo>) -> Result<InfoPair> {
    match (y, sensor) {
        (Some(y), Some(s)) => s.correct(&state.pred, y),
        (None, None) => Ok(state.pred.clone()),
        (Some(_), None) => Err(Error::InvalidArgument("measurement supplied to a non-sensor node".into())),
        (None, Some(_)) => Err(Error::InvalidArgument("sensor node is missing its measurement".into())),
    }
}

/// `true` when at least `λ_min(m) ≥ −tol`.
fn is_psd_within(m: &Matrix, tol: f64) -> bool {
    linalg::min_eigenvalue(&linalg::symmetrized(m.clone())) >= -tol
}

/// Transmission rule: stay silent only if the mean discrepancy and the
/// information-matrix sandwich are both within thresholds.
pub fn trigger_decision(filt: &InfoPair, bar_q: &Vector, bar_m: &Matrix, params: &TriggerParams) -> bool {
    let (Ok(x), Ok(chol_bar)) = (filt.mean(), linalg::cholesky(bar_m, "bar information matrix")) else {
        return true;
    };
    let x_bar = chol_bar.solve(bar_q);
    let d = x - x_bar;
    let discrepancy = (d.transpose() * &filt.info * &d)[(0, 0)];
    if discrepancy.is_nan() || discrepancy > params.alpha {
        return true;
    }
    let tol = 1e-9 * linalg::sym_norm(&filt.info);
    let lower = bar_m - &filt.info / (1.0 + params.beta);
    let upper = &filt.info * (1.0 + params.delta) - bar_m;
    !(is_psd_within(&lower, tol) && is_psd_within(&upper, tol))
}

/// `D(N(x̄, M̄⁻¹) ‖ N(x, Ω⁻¹))` between the bar view and the filtered pair.
pub fn silent_divergence(filt: &InfoPair, bar_q: &Vector, bar_m: &Matrix) -> Result<f64> {
    let bar = InfoPair {
        q: bar_q.clone(),
        info: bar_m.clone(),
    };
    divergence::info_pair_kl(&bar, filt)
}

/// What a node has about one in-neighbor during fusion.
#[derive(Debug, Clone, Copy)]
pub enum Incoming<'a> {
    Broadcast(&'a InfoPair),
    /// `(q̄_j, M̄_j)` from the local replica of the silent neighbor's bar chain.
    Silent { q: &'a Vector, m: &'a Matrix },
}

/// Convex combination of the own pair and the in-neighbor pairs, shrinking
/// silent neighbors' bar pairs by `1/(1+δ)`.
pub fn fuse(own: &InfoPair, own_weight: f64, incoming: &[(f64, Incoming<'_>)], delta: f64) -> Result<InfoPair> {
    let total = own_weight + incoming.iter().map(|(w, _)| *w).sum::<f64>();
    if (total - 1.0).abs() > 1e-12 || own_weight < 0.0 || incoming.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fusion weights must be nonnegative and sum to 1, got {total}"
        )));
    }
    let mut q = &own.q * own_weight;
    let mut info = &own.info * own_weight;
    let shrink = 1.0 / (1.0 + delta);
    for (w, inc) in incoming {
        match inc {
            Incoming::Broadcast(pair) => {
                q += &pair.q * *w;
                info += &pair.info * *w;
            }
            Incoming::Silent { q: qb, m } => {
                q += *qb * (w * shrink);
                info += *m * (w * shrink);
            }
        }
    }
    Ok(InfoPair { q, info })
}

/// Advances a bar chain one step. `received` is the broadcast pair when the
/// owner transmitted this tick.
pub fn bar_update(
    chain: &BarChain,
    received: Option<&InfoPair>,
    dynamics: &Dynamics,
    u: &Vector,
    variant: &dyn FilterVariant,
) -> Result<BarChain> {
    let breve = received.unwrap_or(&chain.pair);
    let pred = variant.predict(dynamics, breve, u)?;
    Ok(BarChain {
        pair: pred.pair,
        omega: pred.omega_pred,
        theta: pred.theta,
    })
}

/// Time update of the fused pair.
pub fn node_predict(fused: &InfoPair, dynamics: &Dynamics, u: &Vector, variant: &dyn FilterVariant) -> Result<RobustPrediction> {
    variant.predict(dynamics, fused, u)
}

/// Per-node outcome of one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub t: usize,
    pub transmitted: Vec<bool>,
    pub broadcasts: Vec<Broadcast>,
    /// Divergence of the bar view from the filtered pair, for silent nodes when
    /// divergence tracking is on.
    pub silent_divergence: Vec<Option<f64>>,
}

impl TickReport {
    pub fn rate(&self) -> f64 {
        let n = self.transmitted.len().max(1);
        self.transmitted.iter().filter(|&&c| c).count() as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub tick: usize,
    pub node: usize,
    pub transmitted: bool,
    pub theta: f64,
    pub theta_bar: f64,
}

pub fn write_event_log<W: Write>(records: &[EventRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tick", "node", "c", "theta", "theta_bar"])?;
    for r in records {
        w.write_record([
            r.tick.to_string(),
            r.node.to_string(),
            u8::from(r.transmitted).to_string(),
            crate::lfsim::format_float(r.theta),
            crate::lfsim::format_float(r.theta_bar),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Engine options beyond the filter variant itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EngineOptions {
    pub bar_matrix: BarMatrix,
    pub track_divergence: bool,
    pub log_events: bool,
}

/// Network-wide state of the distributed filter.
#[derive(Debug, Clone)]
pub struct Engine {
    net: Network,
    weights: ConsensusWeights,
    model: NominalModel,
    dynamics: Dynamics,
    sensors: Vec<Option<SensorInfo>>,
    variant: Arc<dyn FilterVariant>,
    options: EngineOptions,
    states: Vec<NodeState>,
    /// `replicas[i][k]` is node `i`'s copy of the bar chain of `net.in_neighbors(i)[k]`.
    replicas: Vec<Vec<BarChain>>,
    t: usize,
    events: Vec<EventRecord>,
}

impl Engine {
    pub fn new(model: &NominalModel, net: &Network, variant: Arc<dyn FilterVariant>, options: EngineOptions) -> Result<Self> {
        let n_nodes = net.node_count();
        let mut sensors: Vec<Option<SensorInfo>> = vec![None; n_nodes];
        for s in &model.sensors {
            if s.node >= n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "sensor model for node {} outside 0..{n_nodes}",
                    s.node
                )));
            }
            if !net.is_sensor(s.node) {
                return Err(Error::InvalidArgument(format!(
                    "node {} has a sensor model but is not a sensor of the network",
                    s.node
                )));
            }
            sensors[s.node] = Some(SensorInfo::new(&s.c, &s.r)?);
        }
        if let Some(&missing) = net.sensors().iter().find(|&&i| sensors[i].is_none()) {
            return Err(Error::InvalidArgument(format!("sensor node {missing} has no sensor model")));
        }
        let prior = InfoPair::from_moments(&model.mu0, &model.p0)?;
        let states: Vec<NodeState> = (0..n_nodes)
            .map(|i| NodeState::initial(&prior, sensors[i].is_some()))
            .collect();
        let replicas = (0..n_nodes)
            .map(|i| net.in_neighbors(i).iter().map(|&j| states[j].bar.clone()).collect())
            .collect();
        Ok(Self {
            weights: consensus_weights(net),
            net: net.clone(),
            dynamics: Dynamics::new(&model.a, &model.q)?,
            model: model.clone(),
            sensors,
            variant,
            options,
            states,
            replicas,
            t: 0,
            events: Vec::new(),
        })
    }

    pub fn tick(&self) -> usize {
        self.t
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn variant(&self) -> &dyn FilterVariant {
        self.variant.as_ref()
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Node `i`'s replica of in-neighbor `j`'s bar chain.
    pub fn replica(&self, i: usize, j: usize) -> Option<&BarChain> {
        let k = self.net.in_neighbors(i).iter().position(|&x| x == j)?;
        Some(&self.replicas[i][k])
    }

    /// Splits a stacked output (sensor-id order) into per-node measurements.
    pub fn split_measurements(&self, y: &Vector) -> Result<Vec<Option<Vector>>> {
        let mut out = vec![None; self.net.node_count()];
        let mut offset = 0;
        for s in &self.model.sensors {
            let p = s.output_dim();
            if offset + p > y.len() {
                return Err(Error::Dimension(format!(
                    "stacked output has {} entries, sensors need more",
                    y.len()
                )));
            }
            out[s.node] = Some(y.rows(offset, p).into_owned());
            offset += p;
        }
        if offset != y.len() {
            return Err(Error::Dimension(format!(
                "stacked output has {} entries, sensors use {offset}",
                y.len()
            )));
        }
        Ok(out)
    }

    /// Runs one tick with measurements indexed by node.
    pub fn step_network(&mut self, y: &[Option<Vector>]) -> Result<TickReport> {
        let n_nodes = self.net.node_count();
        if y.len() != n_nodes {
            return Err(Error::Dimension(format!(
                "expected {n_nodes} measurement slots, got {}",
                y.len()
            )));
        }
        let params = self.variant.params();
        let mode = self.options.bar_matrix;
        let u = self.model.input_at(self.t);

        let filt = (0..n_nodes)
            .map(|i| node_correct(&self.states[i], y[i].as_ref(), self.sensors[i].as_ref()))
            .collect::<Result<Vec<_>>>()?;

        let transmitted: Vec<bool> = (0..n_nodes)
            .map(|i| {
                let (bq, bm) = self.states[i].bar.view(mode);
                self.t == 0 || trigger_decision(&filt[i], bq, bm, &params)
            })
            .collect();
        let silent_divergence = (0..n_nodes)
            .map(|i| {
                if !self.options.track_divergence || transmitted[i] {
                    return Ok(None);
                }
                let (bq, bm) = self.states[i].bar.view(mode);
                silent_divergence(&filt[i], bq, bm).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        let broadcasts: Vec<Broadcast> = (0..n_nodes)
            .filter(|&i| transmitted[i])
            .map(|i| Broadcast {
                sender: i,
                pair: filt[i].clone(),
            })
            .collect();
        let received = |j: usize| transmitted[j].then_some(&filt[j]);

        let fused = (0..n_nodes)
            .map(|i| {
                let incoming: Vec<(f64, Incoming<'_>)> = self
                    .net
                    .in_neighbors(i)
                    .iter()
                    .zip(&self.replicas[i])
                    .map(|(&j, replica)| {
                        let inc = match received(j) {
                            Some(pair) => Incoming::Broadcast(pair),
                            None => {
                                let (q, m) = replica.view(mode);
                                Incoming::Silent { q, m }
                            }
                        };
                        (self.weights.weight(i, j), inc)
                    })
                    .collect();
                fuse(&filt[i], self.weights.weight(i, i), &incoming, params.delta)
            })
            .collect::<Result<Vec<_>>>()?;

        let variant = self.variant.as_ref();
        let mut next_states = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let pred = node_predict(&fused[i], &self.dynamics, &u, variant)?;
            let bar = bar_update(&self.states[i].bar, received(i), &self.dynamics, &u, variant)?;
            let old = &self.states[i];
            next_states.push(NodeState {
                pred: pred.pair,
                bar,
                filt: filt[i].clone(),
                theta: pred.theta,
                n_since_tx: if transmitted[i] { 0 } else { old.n_since_tx + 1 },
                is_sensor: old.is_sensor,
            });
        }
        let next_replicas = (0..n_nodes)
            .map(|i| {
                self.net
                    .in_neighbors(i)
                    .iter()
                    .zip(&self.replicas[i])
                    .map(|(&j, replica)| bar_update(replica, received(j), &self.dynamics, &u, variant))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        if self.options.log_events {
            self.events.extend(next_states.iter().enumerate().map(|(i, s)| EventRecord {
                tick: self.t,
                node: i,
                transmitted: transmitted[i],
                theta: s.theta,
                theta_bar: s.bar.theta,
            }));
        }
        self.states = next_states;
        self.replicas = next_replicas;
        let report = TickReport {
            t: self.t,
            transmitted,
            broadcasts,
            silent_divergence,
        };
        self.t += 1;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variant::{Dkf, Rdkf};
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> Matrix {
        Matrix::from_element(1, 1, x)
    }

    fn spair(q: f64, m: f64) -> InfoPair {
        InfoPair {
            q: Vector::from_element(1, q),
            info: scalar(m),
        }
    }

    fn params(alpha: f64, beta: f64, delta: f64, b: f64) -> TriggerParams {
        TriggerParams::new(alpha, beta, delta, b).unwrap()
    }

    #[test]
    fn non_sensor_passes_prediction_through() {
        let state = NodeState::initial(&spair(0.0, 1.0), false);
        assert_eq!(node_correct(&state, None, None).unwrap(), spair(0.0, 1.0));
    }

    #[test]
    fn sensor_correction_example() {
        let eye = Matrix::identity(2, 2);
        let prior = InfoPair {
            q: Vector::zeros(2),
            info: eye.clone(),
        };
        let state = NodeState::initial(&prior, true);
        let sensor = SensorInfo::new(&eye, &eye).unwrap();
        let y = Vector::from_vec(vec![1.0, 0.0]);
        let out = node_correct(&state, Some(&y), Some(&sensor)).unwrap();
        assert_eq!(out.q, y);
        assert_eq!(out.info, eye * 2.0);
    }

    #[test]
    fn correction_dispatch_errors() {
        let state = NodeState::initial(&spair(0.0, 1.0), true);
        let sensor = SensorInfo::new(&scalar(1.0), &scalar(1.0)).unwrap();
        assert!(node_correct(&state, None, Some(&sensor)).is_err());
        assert!(node_correct(&state, Some(&Vector::zeros(1)), None).is_err());
    }

    #[test]
    fn projectile_pattern_sparsity() {
        let c = crate::model::projectile_patterns()[0].clone();
        let sensor = SensorInfo::new(&c, &Matrix::identity(3, 3)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let touches = (i == 3 || i == 4) && (j == 3 || j == 4);
                if !touches {
                    assert_eq!(sensor.info[(i, j)], 0.0);
                }
            }
        }
        assert!(sensor.info[(3, 3)] > 0.0 && sensor.info[(4, 4)] > 0.0);
    }

    #[test]
    fn trigger_examples() {
        let p = params(30.0, 0.2, 0.1, 0.0);
        let filt = spair(0.0, 1.0);
        assert!(!trigger_decision(&filt, &filt.q, &filt.info, &p));
        assert!(trigger_decision(&filt, &Vector::from_element(1, 6.0), &scalar(1.0), &p));
        assert!(trigger_decision(&filt, &Vector::zeros(1), &scalar(2.0), &p));
    }

    #[test]
    fn trigger_tie_is_silent() {
        let p = params(4.0, 0.2, 0.1, 0.0);
        assert!(!trigger_decision(&spair(0.0, 1.0), &Vector::from_element(1, 2.0), &scalar(1.0), &p));
    }

    #[test]
    fn trigger_lower_sandwich() {
        let p = params(30.0, 0.2, 0.1, 0.0);
        assert!(trigger_decision(&spair(0.0, 1.0), &Vector::zeros(1), &scalar(0.8), &p));
        assert!(!trigger_decision(&spair(0.0, 1.0), &Vector::zeros(1), &scalar(0.85), &p));
    }

    #[test]
    fn fusion_examples() {
        let own = spair(2.0, 1.0);
        assert_eq!(fuse(&own, 1.0, &[], 0.1).unwrap(), own);

        let other = spair(4.0, 3.0);
        let fused = fuse(&own, 0.5, &[(0.5, Incoming::Broadcast(&other))], 0.1).unwrap();
        assert_eq!(fused, spair(3.0, 2.0));

        let bq = Vector::from_element(1, 1.1);
        let bm = scalar(1.1);
        let fused = fuse(&spair(2.0, 2.0), 0.5, &[(0.5, Incoming::Silent { q: &bq, m: &bm })], 0.1).unwrap();
        assert_relative_eq!(fused.q[0], 1.5, epsilon = 1e-15);
        assert_relative_eq!(fused.info[(0, 0)], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn fusion_rejects_bad_weights() {
        let own = spair(1.0, 1.0);
        assert!(fuse(&own, 0.5, &[], 0.1).is_err());
        assert!(fuse(&own, 0.7, &[(0.7, Incoming::Broadcast(&own))], 0.1).is_err());
    }

    fn unit_dynamics() -> Dynamics {
        Dynamics::new(&scalar(1.0), &scalar(1.0)).unwrap()
    }

    #[test]
    fn bar_update_breve_selection() {
        let dynamics = unit_dynamics();
        let u = Vector::zeros(1);
        let dkf = Dkf::new(params(1.0, 0.1, 0.1, 0.0)).unwrap();
        let chain = BarChain::from_pair(spair(0.5, 2.0));
        let filt = spair(1.0, 3.0);
        let sent = bar_update(&chain, Some(&filt), &dynamics, &u, &dkf).unwrap();
        assert_eq!(sent.pair, dkf.predict(&dynamics, &filt, &u).unwrap().pair);
        let silent = bar_update(&chain, None, &dynamics, &u, &dkf).unwrap();
        assert_eq!(silent.pair, dkf.predict(&dynamics, &chain.pair, &u).unwrap().pair);
        assert_eq!(silent.theta, 0.0);
        assert_eq!(silent.pair.info, silent.omega);
    }

    #[test]
    fn bar_update_deflates() {
        let rdkf = Rdkf::new(params(1.0, 0.1, 0.1, 0.1)).unwrap();
        let chain = BarChain::from_pair(spair(0.0, 1.0));
        let next = bar_update(&chain, None, &unit_dynamics(), &Vector::zeros(1), &rdkf).unwrap();
        assert!(next.theta > 0.0);
        assert_relative_eq!(next.pair.info[(0, 0)], next.omega[(0, 0)] - next.theta, epsilon = 1e-15);
    }

    #[test]
    fn node_predict_examples() {
        let dkf = Dkf::new(params(1.0, 0.1, 0.1, 0.0)).unwrap();
        let fused = InfoPair {
            q: Vector::zeros(2),
            info: Matrix::identity(2, 2),
        };
        let dynamics = Dynamics::new(&Matrix::identity(2, 2), &Matrix::identity(2, 2)).unwrap();
        let pred = node_predict(&fused, &dynamics, &Vector::zeros(2), &dkf).unwrap();
        assert!((pred.pair.info - Matrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert_eq!(pred.theta, 0.0);

        let rdkf = Rdkf::new(params(1.0, 0.1, 0.1, 0.153_426_4)).unwrap();
        let pred = node_predict(&spair(0.0, 1.0), &unit_dynamics(), &Vector::zeros(1), &rdkf).unwrap();
        assert_relative_eq!(pred.theta, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn fused_mean_is_propagated() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let dynamics = Dynamics::new(&a, &(Matrix::identity(2, 2) * 0.1)).unwrap();
        let rdkf = Rdkf::new(params(1.0, 0.1, 0.1, 0.05)).unwrap();
        let fused = InfoPair::from_moments(&Vector::from_vec(vec![1.0, -2.0]), &Matrix::identity(2, 2)).unwrap();
        let u = Vector::from_vec(vec![0.3, 0.0]);
        let pred = node_predict(&fused, &dynamics, &u, &rdkf).unwrap();
        let want = &a * fused.mean().unwrap() + &u;
        assert!((pred.pair.mean().unwrap() - want).amax() < 1e-12);
    }

    #[test]
    fn bar_matrix_parse() {
        assert_eq!("literal".parse::<BarMatrix>().unwrap(), BarMatrix::Literal);
        assert!("other".parse::<BarMatrix>().is_err());
        assert_eq!(BarMatrix::default().name(), "deflated");
    }
}
