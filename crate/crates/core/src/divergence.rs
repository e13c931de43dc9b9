//! Kullback-Leibler divergence between multivariate Gaussians.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// `D(N(m1, S1) ‖ N(m0, S0))`.
pub fn gaussian_kl(m1: &Vector, s1: &Matrix, m0: &Vector, s0: &Matrix) -> Result<f64> {
    let n = m1.len();
    if m0.len() != n || s1.shape() != (n, n) || s0.shape() != (n, n) {
        return Err(Error::Dimension("gaussian_kl operands disagree in size".into()));
    }
    let c0 = linalg::cholesky(s0, "reference covariance")?;
    let c1 = linalg::cholesky(s1, "covariance")?;
    let trace = c0.solve(s1).trace();
    let diff = m0 - m1;
    let maha = diff.dot(&c0.solve(&diff));
    let log_det0 = 2.0 * c0.l().diagonal().map(f64::ln).sum();
    let log_det1 = 2.0 * c1.l().diagonal().map(f64::ln).sum();
    Ok(0.5 * (trace - n as f64 + maha + log_det0 - log_det1))
}

/// KL divergence between two beliefs held in information form `(q, M)`.
pub fn info_pair_kl(p1: &crate::robust::InfoPair, p0: &crate::robust::InfoPair) -> Result<f64> {
    gaussian_kl(&p1.mean()?, &p1.covariance()?, &p0.mean()?, &p0.covariance()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_kl() {
        // ½[σ1²/σ0² − 1 + (m0 − m1)²/σ0² + ln(σ0²/σ1²)]
        let got = gaussian_kl(
            &Vector::from_element(1, 1.0),
            &Matrix::from_element(1, 1, 2.0),
            &Vector::from_element(1, -1.0),
            &Matrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        let want = 0.5 * (0.5 - 1.0 + 1.0 + 2.0_f64.ln());
        assert_relative_eq!(got, want, epsilon = 1e-15);
    }

    #[test]
    fn identical_gaussians() {
        let m = Vector::from_vec(vec![0.3, -2.0]);
        let s = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(gaussian_kl(&m, &s, &m, &s).unwrap().abs() < 1e-15);
    }
}
