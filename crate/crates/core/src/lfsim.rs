//! Trajectory generation under the nominal model and under the least-favorable
//! model of the centralized robust filter.
//!
//! The least-favorable world runs the centralized robust filter in lockstep and
//! draws `z_t = [x_{t+1}; y_t]` from the nominal transition density tilted by
//! `exp(θ̃_t/2 · ‖x_{t+1} − x̂_{t+1|t}‖²)`. All covariance quantities of the
//! filter are data independent, so they are computed once per horizon in a
//! [`LeastFavorablePlan`] and shared by every Monte-Carlo run.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::NominalModel;
use crate::robust::{self, Dynamics, InfoPair, SensorInfo};
use crate::seeding;

/// States `x_0..=x_T` and stacked outputs `y_0..y_{T-1}` (sensor-id order).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub outputs: Vec<Vector>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.outputs.len()
    }

    /// CSV trace with columns `t, x1..xn, y1..yp`; the final state row has empty outputs.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.states.first().map_or(0, Vector::len);
        let p = self.outputs.first().map_or(0, Vector::len);
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("x{k}")));
        header.extend((1..=p).map(|k| format!("y{k}")));
        w.write_record(&header)?;
        for (t, x) in self.states.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| format_float(*v)));
            match self.outputs.get(t) {
                Some(y) => row.extend(y.iter().map(|v| format_float(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), p)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn normals(rng: &mut ChaCha20Rng, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn draw_initial(model: &NominalModel, rng: &mut ChaCha20Rng) -> Vector {
    let root = linalg::psd_sqrt(&model.p0);
    &model.mu0 + root * normals(rng, model.state_dim())
}

/// One nominal transition: process noise first, then each sensor's noise in id order.
fn nominal_step(model: &NominalModel, x: &Vector, u: &Vector, rng: &mut ChaCha20Rng) -> (Vector, Vector) {
    let omega = normals(rng, model.noise_dim());
    let next = &model.a * x + u + &model.b * omega;
    let mut y = Vector::zeros(model.output_dim());
    let mut offset = 0;
    for s in &model.sensors {
        let v = normals(rng, s.d.ncols());
        let ys = &s.c * x + &s.d * v;
        y.rows_mut(offset, ys.len()).copy_from(&ys);
        offset += ys.len();
    }
    (next, y)
}

pub fn sample_nominal_with(model: &NominalModel, horizon: usize, rng: &mut ChaCha20Rng) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut x = draw_initial(model, rng);
    let mut states = vec![x.clone()];
    let mut outputs = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (next, y) = nominal_step(model, &x, &model.input_at(t), rng);
        outputs.push(y);
        states.push(next.clone());
        x = next;
    }
    Ok(Trajectory { states, outputs })
}

/// Direct simulation of the nominal model.
pub fn sample_nominal_trajectory(model: &NominalModel, horizon: usize, seed: u64) -> Result<Trajectory> {
    sample_nominal_with(model, horizon, &mut seeding::run_rng(seed, 0))
}

/// Centralized robust filter state at time `t`, before `y_t` arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralFilterState {
    pub t: usize,
    /// `(q_{t|t-1}, Ψ_{t|t-1})`
    pub pred: InfoPair,
    /// `x̂_{t|t-1}`
    pub pred_mean: Vector,
    /// `θ_t`, used when predicting from `t` to `t + 1`.
    pub theta: f64,
    /// Predictor gain `G_t = A V Cᵀ (C V Cᵀ + R)⁻¹` with `V = Ψ⁻¹`.
    pub gain: Matrix,
}

/// Data-independent part of one centralized step.
#[derive(Debug, Clone)]
struct CovarianceStep {
    gain: Matrix,
    theta: f64,
    psi_next: Matrix,
}

/// Centralized robust filter over the stacked sensor model.
#[derive(Debug, Clone)]
pub struct CentralFilter {
    model: NominalModel,
    dynamics: Dynamics,
    sensor: SensorInfo,
    c: Matrix,
    r: Matrix,
    b: f64,
}

impl CentralFilter {
    pub fn new(model: &NominalModel, b: f64) -> Result<Self> {
        let c = model.stacked_c();
        let r = model.stacked_r();
        Ok(Self {
            dynamics: Dynamics::new(&model.a, &model.q)?,
            sensor: SensorInfo::new(&c, &r)?,
            model: model.clone(),
            c,
            r,
            b,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.b
    }

    pub fn initial_state(&self) -> Result<CentralFilterState> {
        let pred = InfoPair::from_moments(&self.model.mu0, &self.model.p0)?;
        self.prepare(0, pred)
    }

    fn covariance_step(&self, psi: &Matrix) -> Result<CovarianceStep> {
        let v = linalg::spd_inverse(psi, "Psi")?;
        let innovation = linalg::symmetrized(&self.c * &v * self.c.transpose() + &self.r);
        let chol = linalg::cholesky(&innovation, "innovation covariance")?;
        let gain = chol.solve(&(&self.c * &v * self.dynamics.a.transpose())).transpose();
        let omega_filt = psi + &self.sensor.info;
        let omega_pred = self.dynamics.predict_info_matrix(&omega_filt)?;
        let theta = robust::solve_theta(&omega_pred, self.b)?;
        let mut psi_next = omega_pred;
        for i in 0..psi_next.nrows() {
            psi_next[(i, i)] -= theta;
        }
        Ok(CovarianceStep { gain, theta, psi_next })
    }

    fn prepare(&self, t: usize, pred: InfoPair) -> Result<CentralFilterState> {
        let step = self.covariance_step(&pred.info)?;
        Ok(CentralFilterState {
            t,
            pred_mean: pred.mean()?,
            pred,
            theta: step.theta,
            gain: step.gain,
        })
    }

    /// Correction with the stacked `y_t`, then robust prediction to `t + 1`.
    pub fn correct_predict(&self, state: &CentralFilterState, y: &Vector) -> Result<CentralFilterState> {
        let filt = self.sensor.correct(&state.pred, y)?;
        let pred = self
            .dynamics
            .robust_predict(&filt, &self.model.input_at(state.t), self.b)?;
        self.prepare(state.t + 1, pred.pair)
    }
}

/// See [`CentralFilter::correct_predict`].
pub fn central_correct_predict(state: &CentralFilterState, y: &Vector, model: &NominalModel, b: f64) -> Result<CentralFilterState> {
    CentralFilter::new(model, b)?.correct_predict(state, y)
}

/// Law of `z_t = [x_{t+1}; y_t]` given `x_t` under the tilted density.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGaussian {
    pub mean: Vector,
    pub precision: Matrix,
}

impl TiltedGaussian {
    pub fn covariance(&self) -> Result<Matrix> {
        linalg::spd_inverse(&self.precision, "tilted precision")
    }
}

/// Nominal conditional `N(m, K)` of `z_t` given `x_t`.
pub fn nominal_conditional(x: &Vector, t: usize, model: &NominalModel) -> (Vector, Matrix) {
    let n = model.state_dim();
    let c = model.stacked_c();
    let mut m = Vector::zeros(n + c.nrows());
    m.rows_mut(0, n).copy_from(&(&model.a * x + model.input_at(t)));
    m.rows_mut(n, c.nrows()).copy_from(&(&c * x));
    let k = linalg::block_diagonal(&[model.q.clone(), model.stacked_r()]);
    (m, k)
}

/// `H = [I_n, −G]`.
fn error_map(gain: &Matrix) -> Matrix {
    let (n, p) = gain.shape();
    let mut h = Matrix::zeros(n, n + p);
    h.view_mut((0, 0), (n, n)).fill_with_identity();
    h.view_mut((0, n), (n, p)).copy_from(&(-gain));
    h
}

/// Tilted law of `z_t` given `x_t` with an explicit risk parameter.
pub fn lf_tilt_with(x: &Vector, state: &CentralFilterState, model: &NominalModel, theta: f64) -> Result<TiltedGaussian> {
    let (m, k) = nominal_conditional(x, state.t, model);
    let k_inv = linalg::spd_inverse(&k, "nominal noise covariance")?;
    let h = error_map(&state.gain);
    let c = model.stacked_c();
    let u = model.input_at(state.t);
    let a_t = &model.a * &state.pred_mean + &u - &state.gain * (&c * &state.pred_mean);
    let precision = linalg::symmetrized(&k_inv - h.transpose() * &h * theta);
    let chol = linalg::cholesky(&precision, "tilted precision")?;
    let rhs = &k_inv * &m - h.transpose() * a_t * theta;
    Ok(TiltedGaussian {
        mean: chol.solve(&rhs),
        precision,
    })
}

/// Tilted law using the filter's own `θ_t` stored in `state`.
pub fn lf_tilt(x: &Vector, state: &CentralFilterState, model: &NominalModel) -> Result<TiltedGaussian> {
    lf_tilt_with(x, state, model, state.theta)
}

/// Quantities a [`TiltPolicy`] may use to pick the world's risk parameter.
#[derive(Debug, Clone, Copy)]
pub struct TiltInputs<'a> {
    pub b: f64,
    pub filter_theta: f64,
    /// `S = Q + G R Gᵀ`, nominal covariance of the prediction error given `x_t`.
    pub innovation_noise: &'a Matrix,
    /// `F = A − G C`
    pub error_transition: &'a Matrix,
    /// Actual covariance of `x_t − x̂_{t|t-1}` under the world.
    pub error_cov: &'a Matrix,
}

/// Strategy choosing the risk parameter `θ̃_t` of the least-favorable tilt.
pub trait TiltPolicy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn world_theta(&self, inputs: &TiltInputs<'_>) -> Result<f64>;
}

/// Tilts with the centralized filter's own `θ_t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FilterTheta;

impl TiltPolicy for FilterTheta {
    fn name(&self) -> &'static str {
        "filter-theta"
    }

    fn world_theta(&self, inputs: &TiltInputs<'_>) -> Result<f64> {
        Ok(inputs.filter_theta)
    }
}

/// Chooses `θ̃_t` so that the expected divergence of the tilted transition
/// from the nominal one, under the actual state-error law, equals `b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaturatingBudget;

impl TiltPolicy for SaturatingBudget {
    fn name(&self) -> &'static str {
        "saturating"
    }

    fn world_theta(&self, inputs: &TiltInputs<'_>) -> Result<f64> {
        if inputs.b == 0.0 {
            return Ok(0.0);
        }
        let spectrum = TiltSpectrum::new(inputs);
        let s_max = spectrum.s.iter().copied().fold(0.0, f64::max);
        let hi = (1.0 - robust::THETA_BRACKET_MARGIN) / s_max;
        robust::bisect_increasing(
            |theta| spectrum.expected_kl(theta),
            inputs.b,
            0.0,
            hi,
            1e-12 * inputs.b.max(1.0),
            robust::THETA_MAX_ITER,
        )
    }
}

pub const TILT_POLICIES: [&str; 2] = ["saturating", "filter-theta"];

pub fn tilt_policy(name: &str) -> Result<Box<dyn TiltPolicy>> {
    match name {
        "saturating" => Ok(Box::new(SaturatingBudget)),
        "filter-theta" => Ok(Box::new(FilterTheta)),
        other => Err(Error::UnknownStrategy {
            kind: "tilt policy",
            name: other.to_string(),
            known: TILT_POLICIES.join(", "),
        }),
    }
}

/// `S` diagonalized, with `F Σ Fᵀ` in the same basis.
struct TiltSpectrum {
    s: Vec<f64>,
    spread: Vec<f64>,
}

impl TiltSpectrum {
    fn new(inputs: &TiltInputs<'_>) -> Self {
        let eig = nalgebra::SymmetricEigen::new(linalg::symmetrized(inputs.innovation_noise.clone()));
        let fsf = inputs.error_transition * inputs.error_cov * inputs.error_transition.transpose();
        let rotated = eig.eigenvectors.transpose() * fsf * &eig.eigenvectors;
        Self {
            s: eig.eigenvalues.iter().copied().collect(),
            spread: rotated.diagonal().iter().copied().collect(),
        }
    }

    /// Covariance part `γ(S⁻¹, θ)` plus mean part `½θ² tr(Fᵀ L S L F Σ)`, `L = (I − θS)⁻¹`.
    fn expected_kl(&self, theta: f64) -> f64 {
        self.s
            .iter()
            .zip(&self.spread)
            .map(|(&s, &m)| {
                let r = theta * s;
                let denom = 1.0 - r;
                0.5 * (r / denom + (-r).ln_1p()) + 0.5 * theta * theta * s * m / (denom * denom)
            })
            .sum()
    }
}

/// Closed-form `E[D(φ̃_t ‖ φ_t)]` for a given world risk parameter.
pub fn expected_tilt_kl(inputs: &TiltInputs<'_>, theta: f64) -> f64 {
    TiltSpectrum::new(inputs).expected_kl(theta)
}

/// Everything the least-favorable sampler needs at one time step.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub filter_theta: f64,
    pub world_theta: f64,
    pub gain: Matrix,
    /// `Ψ_{t|t-1}`
    pub psi: Matrix,
    /// Actual covariance of `x_t − x̂_{t|t-1}`.
    pub error_cov: Matrix,
    /// `θ̃ K Hᵀ (I − θ̃S)⁻¹`: maps `H m − a` to the tilted mean shift.
    shift: Matrix,
    /// Lower Cholesky factor of the tilted precision; `None` when untilted.
    precision_factor: Option<Matrix>,
}

/// Precomputed least-favorable world over a fixed horizon.
#[derive(Debug, Clone)]
pub struct LeastFavorablePlan {
    model: NominalModel,
    b: f64,
    policy: &'static str,
    c: Matrix,
    steps: Vec<StepPlan>,
    /// `Ψ_{T|T-1}` and the matching actual error covariance after the last step.
    final_psi: Matrix,
    final_error_cov: Matrix,
}

impl LeastFavorablePlan {
    pub fn new(model: &NominalModel, b: f64, horizon: usize, policy: &dyn TiltPolicy) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if b.is_nan() || b < 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance b = {b}")));
        }
        let filter = CentralFilter::new(model, b)?;
        let n = model.state_dim();
        let c = model.stacked_c();
        let r = model.stacked_r();
        let k = linalg::block_diagonal(&[model.q.clone(), r.clone()]);
        let k_inv = linalg::spd_inverse(&k, "nominal noise covariance")?;
        let eye = Matrix::identity(n, n);

        let mut psi = linalg::spd_inverse(&model.p0, "P0")?;
        let mut error_cov = model.p0.clone();
        let mut steps = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let step = filter.covariance_step(&psi)?;
            let s = linalg::symmetrized(&model.q + &step.gain * &r * step.gain.transpose());
            let f = &model.a - &step.gain * &c;
            let world_theta = policy.world_theta(&TiltInputs {
                b,
                filter_theta: step.theta,
                innovation_noise: &s,
                error_transition: &f,
                error_cov: &error_cov,
            })?;
            let (shift, precision_factor, next_cov) = if world_theta == 0.0 {
                let next = linalg::symmetrized(&f * &error_cov * f.transpose() + &s);
                (Matrix::zeros(k.nrows(), n), None, next)
            } else {
                let l = linalg::cholesky(&(&eye - &s * world_theta), "I - theta S")
                    .map_err(|_| Error::NotPositiveDefinite("tilted precision"))?
                    .inverse();
                let h = error_map(&step.gain);
                let shift = &k * h.transpose() * &l * world_theta;
                let precision = linalg::symmetrized(&k_inv - h.transpose() * &h * world_theta);
                let factor = linalg::cholesky(&precision, "tilted precision")?.l();
                let lf = &l * &f;
                let next = linalg::symmetrized(&lf * &error_cov * lf.transpose() + &l * &s);
                (shift, Some(factor), next)
            };
            steps.push(StepPlan {
                filter_theta: step.theta,
                world_theta,
                gain: step.gain,
                psi: psi.clone(),
                error_cov: error_cov.clone(),
                shift,
                precision_factor,
            });
            psi = step.psi_next;
            error_cov = next_cov;
        }
        Ok(Self {
            model: model.clone(),
            b,
            policy: policy.name(),
            c,
            steps,
            final_psi: psi,
            final_error_cov: error_cov,
        })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.b
    }

    pub fn policy(&self) -> &'static str {
        self.policy
    }

    pub fn steps(&self) -> &[StepPlan] {
        &self.steps
    }

    /// `Ψ_{t|t-1}` for `t` in `0..=T`.
    pub fn psi(&self, t: usize) -> &Matrix {
        self.steps.get(t).map_or(&self.final_psi, |s| &s.psi)
    }

    /// Closed-form actual covariance of `x_t − x̂_{t|t-1}` for `t` in `0..=T`.
    pub fn error_cov(&self, t: usize) -> &Matrix {
        self.steps.get(t).map_or(&self.final_error_cov, |s| &s.error_cov)
    }

    /// One trajectory together with the filter's predictions `x̂_{t|t-1}`, `t = 0..=T`.
    pub fn sample(&self, rng: &mut ChaCha20Rng) -> Result<(Trajectory, Vec<Vector>)> {
        let model = &self.model;
        let n = model.state_dim();
        let mut x = draw_initial(model, rng);
        let mut x_hat = model.mu0.clone();
        let mut states = vec![x.clone()];
        let mut predictions = vec![x_hat.clone()];
        let mut outputs = Vec::with_capacity(self.horizon());
        for (t, step) in self.steps.iter().enumerate() {
            let u = model.input_at(t);
            let (next, y) = match &step.precision_factor {
                None => nominal_step(model, &x, &u, rng),
                Some(factor) => {
                    let ax = &model.a * &x + &u;
                    let cx = &self.c * &x;
                    // H m − a = (A − G C)(x − x̂)
                    let a_t = &model.a * &x_hat + &u - &step.gain * (&self.c * &x_hat);
                    let discrepancy = &ax - &step.gain * &cx - a_t;
                    let mut z = Vector::zeros(n + cx.len());
                    z.rows_mut(0, n).copy_from(&ax);
                    z.rows_mut(n, cx.len()).copy_from(&cx);
                    z += &step.shift * discrepancy;
                    let xi = normals(rng, z.len());
                    let noise = factor
                        .transpose()
                        .solve_upper_triangular(&xi)
                        .expect("Cholesky factor has a positive diagonal");
                    z += noise;
                    (z.rows(0, n).into_owned(), z.rows(n, z.len() - n).into_owned())
                }
            };
            x_hat = &model.a * &x_hat + &u + &step.gain * (&y - &self.c * &x_hat);
            states.push(next.clone());
            outputs.push(y);
            predictions.push(x_hat.clone());
            x = next;
        }
        Ok((Trajectory { states, outputs }, predictions))
    }

    /// Reconstructs the centralized filter states along a sampled run.
    pub fn filter_log(&self, predictions: &[Vector]) -> Vec<CentralFilterState> {
        self.steps
            .iter()
            .zip(predictions)
            .enumerate()
            .map(|(t, (step, x_hat))| CentralFilterState {
                t,
                pred: InfoPair {
                    q: &step.psi * x_hat,
                    info: step.psi.clone(),
                },
                pred_mean: x_hat.clone(),
                theta: step.filter_theta,
                gain: step.gain.clone(),
            })
            .collect()
    }
}

/// Least-favorable trajectory with the default (saturating) tilt policy.
pub fn sample_lf_trajectory(model: &NominalModel, b: f64, horizon: usize, seed: u64) -> Result<(Trajectory, Vec<CentralFilterState>)> {
    let plan = LeastFavorablePlan::new(model, b, horizon, &SaturatingBudget)?;
    let (traj, predictions) = plan.sample(&mut seeding::run_rng(seed, 0))?;
    let log = plan.filter_log(&predictions);
    Ok((traj, log))
}
