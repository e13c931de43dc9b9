//! Nominal state-space model, sensor-network digraph, model validators and the
//! projectile-tracking scenario.
//!
//! Node ids are zero-based throughout the crate.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_len, check_square, Matrix, Vector};
use crate::serde_mat;

/// Known deterministic input `u_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum InputSequence {
    #[default]
    Zero,
    Constant(Vec<f64>),
    /// `u_t` for `t < len`, zero afterwards.
    Table(Vec<Vec<f64>>),
}

impl InputSequence {
    pub fn at(&self, t: usize, n: usize) -> Vector {
        match self {
            InputSequence::Zero => Vector::zeros(n),
            InputSequence::Constant(u) => Vector::from_column_slice(u),
            InputSequence::Table(rows) => rows
                .get(t)
                .map_or_else(|| Vector::zeros(n), |u| Vector::from_column_slice(u)),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let bad = match self {
            InputSequence::Zero => false,
            InputSequence::Constant(u) => u.len() != n,
            InputSequence::Table(rows) => rows.iter().any(|u| u.len() != n),
        };
        if bad {
            return Err(Error::Dimension(format!("input vectors must have length {n}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub node: usize,
    pub c: Matrix,
    pub d: Matrix,
    /// `D Dᵀ`
    pub r: Matrix,
}

impl SensorModel {
    pub fn new(node: usize, c: Matrix, d: Matrix) -> Result<Self> {
        if d.nrows() != c.nrows() {
            return Err(Error::Dimension(format!(
                "sensor {node}: D has {} rows, C has {}",
                d.nrows(),
                c.nrows()
            )));
        }
        let r = linalg::symmetrized(&d * d.transpose());
        Ok(Self { node, c, d, r })
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// `x_{t+1} = A x_t + u_t + B ω_t`, `y^i_t = C^i x_t + D^i v^i_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct NominalModel {
    pub a: Matrix,
    pub b: Matrix,
    /// `B Bᵀ`
    pub q: Matrix,
    /// Sorted by node id.
    pub sensors: Vec<SensorModel>,
    pub mu0: Vector,
    pub p0: Matrix,
    pub input: InputSequence,
}

impl NominalModel {
    pub fn new(
        a: Matrix,
        b: Matrix,
        mut sensors: Vec<SensorModel>,
        mu0: Vector,
        p0: Matrix,
        input: InputSequence,
    ) -> Result<Self> {
        let n = a.nrows();
        check_square(&a, n, "A")?;
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B must have {n} rows, got {}", b.nrows())));
        }
        check_len(&mu0, n, "mu0")?;
        check_square(&p0, n, "P0")?;
        input.check(n)?;
        sensors.sort_by_key(|s| s.node);
        for pair in sensors.windows(2) {
            if pair[0].node == pair[1].node {
                return Err(Error::InvalidArgument(format!(
                    "node {} has two sensor models",
                    pair[0].node
                )));
            }
        }
        for s in &sensors {
            if s.c.ncols() != n {
                return Err(Error::Dimension(format!(
                    "sensor {}: C has {} columns, state has {n}",
                    s.node,
                    s.c.ncols()
                )));
            }
        }
        let q = linalg::symmetrized(&b * b.transpose());
        Ok(Self {
            a,
            b,
            q,
            sensors,
            mu0,
            p0,
            input,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.sensors.iter().map(SensorModel::output_dim).sum()
    }

    pub fn input_at(&self, t: usize) -> Vector {
        self.input.at(t, self.state_dim())
    }

    pub fn sensor(&self, node: usize) -> Option<&SensorModel> {
        self.sensors
            .binary_search_by_key(&node, |s| s.node)
            .ok()
            .map(|i| &self.sensors[i])
    }

    /// `col(C^i)` in sensor-id order.
    pub fn stacked_c(&self) -> Matrix {
        let blocks: Vec<Matrix> = self.sensors.iter().map(|s| s.c.clone()).collect();
        linalg::vstack(&blocks, self.state_dim()).expect("sensor columns checked at construction")
    }

    /// `blkdiag(R^i)` in sensor-id order.
    pub fn stacked_r(&self) -> Matrix {
        let blocks: Vec<Matrix> = self.sensors.iter().map(|s| s.r.clone()).collect();
        linalg::block_diagonal(&blocks)
    }

    pub fn stacked_d(&self) -> Matrix {
        let blocks: Vec<Matrix> = self.sensors.iter().map(|s| s.d.clone()).collect();
        linalg::block_diagonal(&blocks)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensor {
    node: usize,
    #[serde(with = "serde_mat")]
    c: Matrix,
    #[serde(with = "serde_mat")]
    d: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(with = "serde_mat")]
    a: Matrix,
    #[serde(with = "serde_mat")]
    b: Matrix,
    sensors: Vec<RawSensor>,
    #[serde(with = "serde_mat::vector")]
    mu0: Vector,
    #[serde(with = "serde_mat")]
    p0: Matrix,
    #[serde(default)]
    input: InputSequence,
}

impl TryFrom<RawModel> for NominalModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let sensors = raw
            .sensors
            .into_iter()
            .map(|s| SensorModel::new(s.node, s.c, s.d))
            .collect::<Result<Vec<_>>>()?;
        NominalModel::new(raw.a, raw.b, sensors, raw.mu0, raw.p0, raw.input)
    }
}

impl From<NominalModel> for RawModel {
    fn from(m: NominalModel) -> Self {
        RawModel {
            a: m.a,
            b: m.b,
            sensors: m
                .sensors
                .into_iter()
                .map(|s| RawSensor {
                    node: s.node,
                    c: s.c,
                    d: s.d,
                })
                .collect(),
            mu0: m.mu0,
            p0: m.p0,
            input: m.input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub property: String,
    pub severity: Severity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "{}", self.property),
            Severity::Warning => write!(f, "{} (warning)", self.property),
        }
    }
}

/// Checks `Q ≻ 0`, every `R_i ≻ 0`, `P0 ⪰ 0`, and flags a singular `A` as a warning.
pub fn validate_model(model: &NominalModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut error = |property: String| {
        out.push(Violation {
            property,
            severity: Severity::Error,
        })
    };
    if !linalg::is_positive_definite(&model.q) {
        error("Q not positive definite".into());
    }
    for s in &model.sensors {
        if !linalg::is_positive_definite(&s.r) {
            error(format!("R at sensor node {} not positive definite", s.node));
        }
    }
    let p0_min = linalg::min_eigenvalue(&model.p0);
    if p0_min < -1e-12 * linalg::sym_norm(&model.p0).max(1.0) {
        error("P0 not positive semidefinite".into());
    }
    if linalg::rank(&model.a, 1e-12) < model.state_dim() {
        out.push(Violation {
            property: "A singular".into(),
            severity: Severity::Warning,
        });
    }
    out
}

/// Rank test on the observability matrix of `(A, col(C_i))`.
pub fn collectively_observable(a: &Matrix, sensors: &[Matrix]) -> Result<bool> {
    let n = a.nrows();
    check_square(a, n, "A")?;
    let c = linalg::vstack(sensors, n)?;
    if n == 0 {
        return Ok(true);
    }
    let p = c.nrows();
    let mut obs = Matrix::zeros(p * n, n);
    let mut block = c;
    for k in 0..n {
        obs.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    Ok(linalg::rank(&obs, 1e-10) == n)
}

/// Directed sensor network with all self-loops. An edge `(j, i)` lets `j` send to `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct Network {
    nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    sensors: Vec<usize>,
    in_neighbors: Vec<Vec<usize>>,
    out_neighbors: Vec<Vec<usize>>,
}

impl Network {
    /// `edges` are `(from, to)` pairs; self-loops are added for every node.
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>, sensors: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set: BTreeSet<(usize, usize)> = (0..nodes).map(|i| (i, i)).collect();
        for (j, i) in edges {
            if j >= nodes || i >= nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({j}, {i}) references a node outside 0..{nodes}"
                )));
            }
            set.insert((j, i));
        }
        let mut sensors: Vec<usize> = sensors.into_iter().collect();
        sensors.sort_unstable();
        sensors.dedup();
        if let Some(&bad) = sensors.iter().find(|&&s| s >= nodes) {
            return Err(Error::InvalidArgument(format!("sensor {bad} outside 0..{nodes}")));
        }
        let mut in_neighbors = vec![Vec::new(); nodes];
        let mut out_neighbors = vec![Vec::new(); nodes];
        for &(j, i) in &set {
            if j != i {
                in_neighbors[i].push(j);
                out_neighbors[j].push(i);
            }
        }
        Ok(Self {
            nodes,
            edges: set,
            sensors,
            in_neighbors,
            out_neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// All edges including self-loops.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn sensors(&self) -> &[usize] {
        &self.sensors
    }

    pub fn is_sensor(&self, node: usize) -> bool {
        self.sensors.binary_search(&node).is_ok()
    }

    /// `𝒩_i`, excluding `i`.
    pub fn in_neighbors(&self, node: usize) -> &[usize] {
        &self.in_neighbors[node]
    }

    pub fn out_neighbors(&self, node: usize) -> &[usize] {
        &self.out_neighbors[node]
    }

    /// `d_i = |𝒩_i|`.
    pub fn degree(&self, node: usize) -> usize {
        self.in_neighbors[node].len()
    }

    pub fn has_all_self_loops(&self) -> bool {
        (0..self.nodes).all(|i| self.edges.contains(&(i, i)))
    }

    /// Same topology with a different sensor set.
    pub fn with_sensors(&self, sensors: impl IntoIterator<Item = usize>) -> Result<Self> {
        Network::new(self.nodes, self.edges.iter().copied(), sensors)
    }

    /// Forward and backward reachability from node 0.
    pub fn is_strongly_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; self.nodes];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&self.out_neighbors) && reach(&self.in_neighbors)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    nodes: usize,
    /// Non-self edges `[from, to]`.
    edges: Vec<(usize, usize)>,
    sensors: Vec<usize>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Network::new(raw.nodes, raw.edges, raw.sensors)
    }
}

impl From<Network> for RawNetwork {
    fn from(n: Network) -> Self {
        RawNetwork {
            nodes: n.nodes,
            edges: n.edges.iter().copied().filter(|(j, i)| j != i).collect(),
            sensors: n.sensors,
        }
    }
}

/// Row-stochastic fusion weights `π_{i,j} = 1/(d_i + 1)` on `{i} ∪ 𝒩_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    pub pi: Matrix,
}

impl ConsensusWeights {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.pi[(i, j)]
    }
}

pub fn consensus_weights(net: &Network) -> ConsensusWeights {
    let n = net.node_count();
    let mut pi = Matrix::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / (net.degree(i) + 1) as f64;
        pi[(i, i)] = w;
        for &j in net.in_neighbors(i) {
            pi[(i, j)] = w;
        }
    }
    ConsensusWeights { pi }
}

/// A random Hamiltonian cycle plus `extra_edges` random distinct non-self edges.
pub fn random_strongly_connected_digraph(nodes: usize, extra_edges: usize, seed: u64) -> Result<Network> {
    if nodes == 0 {
        return Err(Error::InvalidArgument("a network needs at least one node".into()));
    }
    let available = (nodes * (nodes - 1)).saturating_sub(nodes);
    if extra_edges > available {
        return Err(Error::InvalidArgument(format!(
            "{extra_edges} extra edges requested, only {available} available for {nodes} nodes"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    if nodes > 1 {
        for k in 0..nodes {
            edges.insert((order[k], order[(k + 1) % nodes]));
        }
    }
    let candidates: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|j| (0..nodes).map(move |i| (j, i)))
        .filter(|&(j, i)| j != i && !edges.contains(&(j, i)))
        .collect();
    edges.extend(candidates.choose_multiple(&mut rng, extra_edges).copied());
    Network::new(nodes, edges, std::iter::empty())
}

/// Parameters of the projectile-tracking scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectileParams {
    pub nodes: usize,
    pub sensors: usize,
    /// Scale `k` in `R_i = √k · P R₀ Pᵀ`.
    pub noise_scale: f64,
    pub extra_edges: usize,
    pub seed: u64,
    /// Shuffle the assignment of measurement patterns to sensors instead of round-robin.
    pub shuffle_patterns: bool,
}

impl Default for ProjectileParams {
    fn default() -> Self {
        Self {
            nodes: 100,
            sensors: 20,
            noise_scale: 1.0,
            extra_edges: 200,
            seed: 1,
            shuffle_patterns: false,
        }
    }
}

const SAMPLING_TIME: f64 = 0.1;
const GRAVITY: f64 = -10.0;

/// `Φ = [[0, 0], [I₃, 0]]` in 3×3 blocks.
pub fn projectile_phi() -> Matrix {
    let mut phi = Matrix::zeros(6, 6);
    for k in 0..3 {
        phi[(k + 3, k)] = 1.0;
    }
    phi
}

/// The three position-measurement patterns `[0₃ₓ₃ diag(·)]`.
pub fn projectile_patterns() -> [Matrix; 3] {
    let pattern = |d: [f64; 3]| {
        let mut c = Matrix::zeros(3, 6);
        for k in 0..3 {
            c[(k, k + 3)] = d[k];
        }
        c
    };
    [pattern([1.0, 1.0, 0.0]), pattern([1.0, 0.0, 1.0]), pattern([0.0, 1.0, 1.0])]
}

/// Projectile tracked by a random strongly connected network; state `[v; p]`.
pub fn build_projectile_scenario(params: &ProjectileParams) -> Result<(NominalModel, Network)> {
    if params.sensors > params.nodes {
        return Err(Error::InvalidArgument(format!(
            "{} sensors requested on {} nodes",
            params.sensors, params.nodes
        )));
    }
    if params.noise_scale.is_nan() || params.noise_scale <= 0.0 {
        return Err(Error::InvalidArgument(format!("noise scale k = {}", params.noise_scale)));
    }
    let eye = Matrix::identity(6, 6);
    let phi = projectile_phi();
    let a = &eye + &phi * SAMPLING_TIME;
    let uc = Vector::from_vec(vec![0.0, 0.0, -GRAVITY, 0.0, 0.0, 0.0]);
    let u = (&eye * SAMPLING_TIME + &phi * (SAMPLING_TIME * SAMPLING_TIME / 2.0)) * uc;
    let b = &eye * 0.001_f64.sqrt();

    let net = random_strongly_connected_digraph(params.nodes, params.extra_edges, params.seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    rng.set_stream(1);
    let mut ids: Vec<usize> = (0..params.nodes).collect();
    ids.shuffle(&mut rng);
    let mut sensor_ids = ids[..params.sensors].to_vec();
    sensor_ids.sort_unstable();

    let mut pattern_of: Vec<usize> = (0..params.sensors).map(|s| s % 3).collect();
    if params.shuffle_patterns {
        pattern_of.shuffle(&mut rng);
    }
    let patterns = projectile_patterns();
    let r0 = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 2.0, 3.5]));
    let sensors = sensor_ids
        .iter()
        .zip(&pattern_of)
        .map(|(&node, &p)| {
            let mut perm: Vec<usize> = (0..3).collect();
            perm.shuffle(&mut rng);
            let mut pm = Matrix::zeros(3, 3);
            for (row, &col) in perm.iter().enumerate() {
                pm[(row, col)] = 1.0;
            }
            let r = (&pm * &r0 * pm.transpose()) * params.noise_scale.sqrt();
            SensorModel::new(node, patterns[p].clone(), linalg::psd_sqrt(&r))
        })
        .collect::<Result<Vec<_>>>()?;

    let model = NominalModel::new(
        a,
        b,
        sensors,
        Vector::zeros(6),
        eye,
        InputSequence::Constant(u.iter().copied().collect()),
    )?;
    let net = net.with_sensors(sensor_ids)?;
    Ok((model, net))
}
