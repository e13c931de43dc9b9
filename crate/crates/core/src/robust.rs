//! Information-form primitives of the risk-sensitive (robust) Kalman filter.
//!
//! Every filter in this crate carries its belief as an [`InfoPair`] `(q, M)`
//! with mean `M⁻¹q` and covariance `M⁻¹`. The robust prediction deflates the
//! nominal predicted information matrix `Ω` to `Ψ = Ω − θI`, where the risk
//! parameter `θ` solves `γ(Ω, θ) = b` for the tolerance `b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_len, check_square, Matrix, Vector};

/// Iteration cap of the bisection used by [`solve_theta`].
pub const THETA_MAX_ITER: usize = 200;
/// The bisection bracket stops at `λ_min · (1 − THETA_BRACKET_MARGIN)`.
pub const THETA_BRACKET_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoPair {
    pub q: Vector,
    /// Information (inverse covariance) matrix, `Ω` or `Ψ` depending on context.
    pub info: Matrix,
}

impl InfoPair {
    pub fn new(q: Vector, info: Matrix) -> Result<Self> {
        check_square(&info, q.len(), "information matrix")?;
        Ok(Self { q, info })
    }

    /// Builds the pair `(P⁻¹μ, P⁻¹)` of a Gaussian with mean `μ` and covariance `P`.
    pub fn from_moments(mean: &Vector, cov: &Matrix) -> Result<Self> {
        check_square(cov, mean.len(), "covariance")?;
        let info = linalg::spd_inverse(cov, "covariance")?;
        let q = &info * mean;
        Ok(Self { q, info })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// The mean `M⁻¹q`, recovered by a Cholesky solve.
    pub fn mean(&self) -> Result<Vector> {
        let chol = linalg::cholesky(&self.info, "information matrix")?;
        Ok(chol.solve(&self.q))
    }

    pub fn covariance(&self) -> Result<Matrix> {
        linalg::spd_inverse(&self.info, "information matrix")
    }
}

/// Output of a robust prediction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustPrediction {
    /// `(q_{t+1|t}, Ψ_{t+1|t})`.
    pub pair: InfoPair,
    /// The undeflated `Ω_{t+1|t}`.
    pub omega_pred: Matrix,
    pub theta: f64,
}

fn gamma_term(ratio: f64) -> f64 {
    // (1 - r)^-1 - 1 + ln(1 - r), arranged to avoid cancellation for small r.
    ratio / (1.0 - ratio) + (-ratio).ln_1p()
}

/// `γ` evaluated from the eigenvalues of `Ω`.
pub fn gamma_from_eigenvalues(eigenvalues: &[f64], theta: f64) -> f64 {
    0.5 * eigenvalues
        .iter()
        .map(|&l| gamma_term(theta / l))
        .sum::<f64>()
}

fn check_theta(theta: f64, lambda_min: f64) -> Result<()> {
    if !(theta >= 0.0 && theta < lambda_min) {
        return Err(Error::ThetaOutOfRange { theta, lambda_min });
    }
    Ok(())
}

/// `γ(Ω, θ) = ½ { tr[(I − θΩ⁻¹)⁻¹ − I] + ln det(I − θΩ⁻¹) }`, computed spectrally.
pub fn gamma(omega: &Matrix, theta: f64) -> Result<f64> {
    if !linalg::is_positive_definite(omega) {
        return Err(Error::NotPositiveDefinite("Omega"));
    }
    let eig = linalg::sym_eigenvalues(omega);
    check_theta(theta, eig[0])?;
    Ok(gamma_from_eigenvalues(&eig, theta))
}

/// `γ(Ω, θ)` through the matrix expression (trace and log-determinant).
pub fn gamma_matrix_form(omega: &Matrix, theta: f64) -> Result<f64> {
    let n = omega.nrows();
    let omega_inv = linalg::spd_inverse(omega, "Omega")?;
    let eye = Matrix::identity(n, n);
    let shrunk = &eye - &omega_inv * theta;
    let chol = linalg::cholesky(&linalg::symmetrized(shrunk), "I - theta Omega^-1")?;
    let trace = (chol.inverse() - &eye).trace();
    let log_det = 2.0 * chol.l().diagonal().map(f64::ln).sum();
    Ok(0.5 * (trace + log_det))
}

/// Bisection for `f(x) = target` with `f` increasing on `[lo, hi]`.
///
/// Stops once `|f(x) − target| ≤ tol` or the bracket can no longer be split.
pub fn bisect_increasing<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut best = (lo, f(lo) - target);
    if best.1 > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target {target} lies below the bracket"
        )));
    }
    let top = f(hi) - target;
    if top < 0.0 && top.abs() > tol {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: top,
        });
    }
    if top.abs() < best.1.abs() {
        best = (hi, top);
    }
    for _ in 0..max_iter {
        if best.1.abs() <= tol {
            return Ok(best.0);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = f(mid) - target;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.1.abs() <= tol {
        Ok(best.0)
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: best.1,
        })
    }
}

/// Risk parameter `θ ∈ [0, λ_min(Ω))` with `γ(Ω, θ) = b`.
///
/// `b = 0` returns exactly zero.
pub fn solve_theta(omega: &Matrix, b: f64) -> Result<f64> {
    if b < 0.0 || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance b = {b}")));
    }
    if !linalg::is_positive_definite(omega) {
        return Err(Error::NotPositiveDefinite("Omega"));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    let eig = linalg::sym_eigenvalues(omega);
    let hi = eig[0] * (1.0 - THETA_BRACKET_MARGIN);
    bisect_increasing(
        |theta| gamma_from_eigenvalues(&eig, theta),
        b,
        0.0,
        hi,
        1e-10 * b.max(1.0),
        THETA_MAX_ITER,
    )
}

/// A sensor's measurement model pre-multiplied into information form.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorInfo {
    /// `CᵀR⁻¹`
    pub gain: Matrix,
    /// `CᵀR⁻¹C`
    pub info: Matrix,
}

impl SensorInfo {
    pub fn new(c: &Matrix, r: &Matrix) -> Result<Self> {
        check_square(r, c.nrows(), "measurement covariance R")?;
        let gain = if c.nrows() == 0 {
            Matrix::zeros(c.ncols(), 0)
        } else {
            let r_inv = linalg::spd_inverse(r, "R")?;
            c.transpose() * r_inv
        };
        let info = linalg::symmetrized(&gain * c);
        Ok(Self { gain, info })
    }

    pub fn state_dim(&self) -> usize {
        self.info.nrows()
    }

    pub fn correct(&self, pred: &InfoPair, y: &Vector) -> Result<InfoPair> {
        check_square(&pred.info, self.state_dim(), "predicted information matrix")?;
        check_len(y, self.gain.ncols(), "measurement")?;
        Ok(InfoPair {
            q: &pred.q + &self.gain * y,
            info: &pred.info + &self.info,
        })
    }
}

/// Correction step: `(q + CᵀR⁻¹y, Ψ + CᵀR⁻¹C)`.
pub fn correct(pred: &InfoPair, c: &Matrix, r: &Matrix, y: &Vector) -> Result<InfoPair> {
    if c.ncols() != pred.dim() {
        return Err(Error::Dimension(format!(
            "C has {} columns, state has {}",
            c.ncols(),
            pred.dim()
        )));
    }
    SensorInfo::new(c, r)?.correct(pred, y)
}

/// State transition with its process-noise covariance, factored once.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub a: Matrix,
    pub q: Matrix,
    q_inv: Matrix,
    q_inv_a: Matrix,
    at_q_inv_a: Matrix,
}

impl Dynamics {
    pub fn new(a: &Matrix, q: &Matrix) -> Result<Self> {
        let n = a.nrows();
        check_square(a, n, "A")?;
        check_square(q, n, "Q")?;
        let q_inv = linalg::spd_inverse(q, "Q")?;
        let q_inv_a = &q_inv * a;
        let at_q_inv_a = linalg::symmetrized(a.transpose() * &q_inv_a);
        Ok(Self {
            a: a.clone(),
            q: q.clone(),
            q_inv,
            q_inv_a,
            at_q_inv_a,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `Q⁻¹ − Q⁻¹A(AᵀQ⁻¹A + Ω)⁻¹AᵀQ⁻¹`, i.e. `(AΩ⁻¹Aᵀ + Q)⁻¹`.
    pub fn predict_info_matrix(&self, omega_filt: &Matrix) -> Result<Matrix> {
        check_square(omega_filt, self.dim(), "filtered information matrix")?;
        let inner = &self.at_q_inv_a + omega_filt;
        let chol = linalg::cholesky(&inner, "A'Q^-1A + Omega")?;
        let x = chol.solve(&self.q_inv_a.transpose());
        Ok(linalg::symmetrized(&self.q_inv - &self.q_inv_a * x))
    }

    /// Classical information-form prediction (no deflation).
    pub fn nominal_predict(&self, filt: &InfoPair, u: &Vector) -> Result<RobustPrediction> {
        self.predict_with_theta(filt, u, |_| Ok(0.0))
    }

    /// Robust prediction with tolerance `b`.
    pub fn robust_predict(&self, filt: &InfoPair, u: &Vector, b: f64) -> Result<RobustPrediction> {
        self.predict_with_theta(filt, u, |omega| solve_theta(omega, b))
    }

    fn predict_with_theta<F>(&self, filt: &InfoPair, u: &Vector, theta_of: F) -> Result<RobustPrediction>
    where
        F: FnOnce(&Matrix) -> Result<f64>,
    {
        check_len(u, self.dim(), "input u")?;
        let omega_pred = self.predict_info_matrix(&filt.info)?;
        let theta = theta_of(&omega_pred)?;
        let mut psi = omega_pred.clone();
        if theta != 0.0 {
            for i in 0..psi.nrows() {
                psi[(i, i)] -= theta;
            }
            if !linalg::is_positive_definite(&psi) {
                return Err(Error::NotPositiveDefinite("deflated information matrix Psi"));
            }
        }
        let pred_mean = &self.a * filt.mean()? + u;
        let q = &psi * pred_mean;
        Ok(RobustPrediction {
            pair: InfoPair { q, info: psi },
            omega_pred,
            theta,
        })
    }
}

/// See [`Dynamics::predict_info_matrix`].
pub fn info_predict_matrix(omega_filt: &Matrix, a: &Matrix, q: &Matrix) -> Result<Matrix> {
    Dynamics::new(a, q)?.predict_info_matrix(omega_filt)
}

/// See [`Dynamics::robust_predict`].
pub fn robust_predict(filt: &InfoPair, a: &Matrix, q: &Matrix, u: &Vector, b: f64) -> Result<RobustPrediction> {
    Dynamics::new(a, q)?.robust_predict(filt, u, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar(x: f64) -> Matrix {
        Matrix::from_element(1, 1, x)
    }

    fn spd_from(seed: &[f64], n: usize) -> Matrix {
        let g = Matrix::from_iterator(n, n, seed.iter().copied().cycle().take(n * n));
        &g * g.transpose() + Matrix::identity(n, n) * 0.1
    }

    #[test]
    fn gamma_vanishes_at_zero() {
        let omega = spd_from(&[0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 1.5, 0.9, -0.8], 3);
        assert_eq!(gamma(&omega, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_scalar_and_diagonal() {
        // ½(1 + ln ½)
        let expected = 0.5 * (1.0 + 0.5_f64.ln());
        assert_relative_eq!(gamma(&scalar(2.0), 1.0).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.1534264, epsilon = 1e-7);
        let diag = Matrix::identity(2, 2) * 2.0;
        assert_relative_eq!(gamma(&diag, 1.0).unwrap(), 2.0 * expected, epsilon = 1e-15);
        assert_relative_eq!(2.0 * expected, 0.3068528, epsilon = 1e-7);
    }

    #[test]
    fn gamma_rejects_theta_at_pole() {
        assert!(matches!(
            gamma(&scalar(2.0), 2.0),
            Err(Error::ThetaOutOfRange { .. })
        ));
        assert!(gamma(&scalar(2.0), -0.1).is_err());
    }

    #[test]
    fn solve_theta_examples() {
        let omega = spd_from(&[1.0, 0.2, -0.3, 0.5], 2);
        assert_eq!(solve_theta(&omega, 0.0).unwrap(), 0.0);

        let b = 0.5 * (1.0 + 0.5_f64.ln());
        assert_relative_eq!(solve_theta(&scalar(2.0), b).unwrap(), 1.0, epsilon = 1e-9);

        let theta = solve_theta(&scalar(1.0), 10.0).unwrap();
        assert!(theta > 0.958 && theta < 0.959, "theta = {theta}");
        assert!((gamma(&scalar(1.0), theta).unwrap() - 10.0).abs() <= 1e-9);
    }

    #[test]
    fn solve_theta_rejects_negative_tolerance() {
        assert!(solve_theta(&scalar(1.0), -1.0).is_err());
    }

    #[test]
    fn correct_examples() {
        let eye = Matrix::identity(2, 2);
        let pred = InfoPair::new(Vector::zeros(2), eye.clone()).unwrap();
        let y = Vector::from_vec(vec![1.0, 0.0]);
        let out = correct(&pred, &eye, &eye, &y).unwrap();
        assert_eq!(out.q, y);
        assert_eq!(out.info, eye * 2.0);

        let pred = InfoPair::new(Vector::from_element(1, 1.0), scalar(2.0)).unwrap();
        let out = correct(&pred, &scalar(1.0), &scalar(0.5), &Vector::from_element(1, 3.0)).unwrap();
        assert_relative_eq!(out.q[0], 7.0);
        assert_relative_eq!(out.info[(0, 0)], 4.0);

        let empty_c = Matrix::zeros(0, 2);
        let pred = InfoPair::new(Vector::from_vec(vec![0.5, -1.0]), Matrix::identity(2, 2)).unwrap();
        let out = correct(&pred, &empty_c, &Matrix::zeros(0, 0), &Vector::zeros(0)).unwrap();
        assert_eq!(out, pred);
    }

    #[test]
    fn correct_dimension_mismatch() {
        let pred = InfoPair::new(Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let c = Matrix::identity(3, 3);
        assert!(matches!(
            correct(&pred, &c, &c, &Vector::zeros(3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn predict_matrix_examples() {
        let eye = Matrix::identity(3, 3);
        let out = info_predict_matrix(&eye, &eye, &eye).unwrap();
        assert!((out - &eye * 0.5).amax() < 1e-15);

        let zero = Matrix::zeros(3, 3);
        let omega = spd_from(&[0.4, 1.0, -0.2, 0.3, 0.8, -1.1, 0.05, 0.6, 0.9], 3);
        let out = info_predict_matrix(&omega, &zero, &eye).unwrap();
        assert!((out - &eye).amax() < 1e-15);
    }

    #[test]
    fn predict_matrix_matches_covariance_form() {
        let omega = spd_from(&[0.9, -0.1, 0.4, 1.3, 0.2, 0.7, -0.5, 0.3, 1.1, 0.6, -0.9, 0.25, 0.8, 0.15, -0.35, 0.45], 4);
        let q = spd_from(&[0.2, 0.1, -0.3, 0.05, 0.4, 0.3, 0.2, -0.1, 0.6, 0.1, 0.2, 0.3, 0.5, 0.1, 0.0, 0.7], 4);
        let a = Matrix::from_row_slice(4, 4, &[
            1.0, 0.1, 0.0, 0.2, -0.3, 0.9, 0.4, 0.0, 0.0, 0.5, 1.2, -0.1, 0.3, 0.0, 0.2, 0.8,
        ]);
        let oracle = (&a * omega.clone().try_inverse().unwrap() * a.transpose() + &q)
            .try_inverse()
            .unwrap();
        let got = info_predict_matrix(&omega, &a, &q).unwrap();
        assert!((&got - &oracle).amax() <= 1e-10 * oracle.amax());
    }

    #[test]
    fn robust_predict_examples() {
        let eye = Matrix::identity(2, 2);
        let filt = InfoPair::new(Vector::zeros(2), eye.clone()).unwrap();
        let pred = robust_predict(&filt, &eye, &eye, &Vector::zeros(2), 0.0).unwrap();
        assert_eq!(pred.theta, 0.0);
        assert!((&pred.pair.info - &eye * 0.5).amax() < 1e-15);
        assert_eq!(pred.pair.info, pred.omega_pred);
        assert_eq!(pred.pair.q, Vector::zeros(2));

        // γ(0.5, 0.25) = ½((1 − 0.5)⁻¹ − 1 + ln 0.5)
        let b = 0.5 * (1.0 + 0.5_f64.ln());
        let filt = InfoPair::new(Vector::zeros(1), scalar(1.0)).unwrap();
        let pred = robust_predict(&filt, &scalar(1.0), &scalar(1.0), &Vector::zeros(1), b).unwrap();
        assert_relative_eq!(pred.omega_pred[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(pred.theta, 0.25, epsilon = 1e-9);
        assert_relative_eq!(pred.pair.info[(0, 0)], 0.25, epsilon = 1e-9);

        let eye6 = Matrix::identity(6, 6);
        let u = Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.05]);
        let filt = InfoPair::new(Vector::zeros(6), eye6.clone()).unwrap();
        let pred = robust_predict(&filt, &eye6, &eye6, &u, 0.05).unwrap();
        assert!((pred.pair.mean().unwrap() - &u).amax() < 1e-12);
    }

    fn spd_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..=8).prop_flat_map(|n| {
            (
                proptest::collection::vec(-2.0f64..2.0, n * n),
                proptest::collection::vec(0.05f64..3.0, n),
            )
                .prop_map(move |(g, diag)| {
                    let g = Matrix::from_vec(n, n, g);
                    linalg::symmetrized(&g * g.transpose() + Matrix::from_diagonal(&Vector::from_vec(diag)))
                })
        })
    }

    proptest! {
        #[test]
        fn gamma_is_increasing(omega in spd_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let lmin = linalg::min_eigenvalue(&omega);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let g_lo = gamma(&omega, lo * lmin * 0.999).unwrap();
            let g_hi = gamma(&omega, hi * lmin * 0.999).unwrap();
            prop_assert!(g_lo < g_hi);
            prop_assert!(g_lo >= 0.0);
        }

        #[test]
        fn solve_theta_round_trip(omega in spd_strategy(), b in 0.0f64..5.0) {
            let theta = solve_theta(&omega, b).unwrap();
            prop_assert!(theta < linalg::min_eigenvalue(&omega));
            let g = gamma(&omega, theta).unwrap();
            prop_assert!((g - b).abs() <= 1e-10 * b.max(1.0));
        }

        #[test]
        fn gamma_forms_agree(omega in spd_strategy(), frac in 0.0f64..0.95) {
            let theta = frac * linalg::min_eigenvalue(&omega);
            let spectral = gamma(&omega, theta).unwrap();
            let matrix = gamma_matrix_form(&omega, theta).unwrap();
            prop_assert!((spectral - matrix).abs() <= 1e-10 * spectral.abs().max(1.0));
        }

        #[test]
        fn deflation_keeps_positivity(omega in spd_strategy(), b in 0.0f64..5.0) {
            let n = omega.nrows();
            let a = Matrix::identity(n, n) + Matrix::from_fn(n, n, |i, j| 0.1 * ((i + 2 * j) as f64).sin());
            let q = Matrix::identity(n, n) * 0.3;
            let filt = InfoPair::new(Vector::from_element(n, 1.0), omega).unwrap();
            let pred = robust_predict(&filt, &a, &q, &Vector::zeros(n), b).unwrap();
            prop_assert!(linalg::is_positive_definite(&pred.pair.info));
            prop_assert!(pred.theta < linalg::min_eigenvalue(&pred.omega_pred));
        }
    }
}
