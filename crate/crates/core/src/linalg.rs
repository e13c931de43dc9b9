//! Small dense helpers over `nalgebra` dynamic matrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn symmetrized(mut m: Matrix) -> Matrix {
    symmetrize(&mut m);
    m
}

pub fn cholesky(m: &Matrix, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

pub fn spd_inverse(m: &Matrix, what: &'static str) -> Result<Matrix> {
    Ok(symmetrized(cholesky(m, what)?.inverse()))
}

pub fn is_positive_definite(m: &Matrix) -> bool {
    m.is_square() && Cholesky::new(m.clone()).is_some()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(symmetrized(m.clone()))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(symmetrized(m.clone()));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    symmetrized(&eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Numerical rank from singular values, relative to the largest one.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(m: &Matrix) -> f64 {
    sym_eigenvalues(m)
        .into_iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()))
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diagonal(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Vertical stack of matrices sharing a column count.
pub fn vstack(blocks: &[Matrix], ncols: usize) -> Result<Matrix> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, ncols);
    let mut r = 0;
    for b in blocks {
        if b.ncols() != ncols {
            return Err(Error::Dimension(format!(
                "cannot stack a block with {} columns onto {ncols}",
                b.ncols()
            )));
        }
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(b);
        r += b.nrows();
    }
    Ok(out)
}

pub(crate) fn check_square(m: &Matrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{what} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_len(v: &Vector, n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "{what} must have length {n}, got {}",
            v.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = psd_sqrt(&m);
        assert!((&s * &s - &m).amax() < 1e-12);
    }

    #[test]
    fn rank_of_deficient_matrix() {
        let m = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, 1e-10), 1);
        assert_eq!(rank(&Matrix::identity(3, 3), 1e-10), 3);
    }

    #[test]
    fn block_diagonal_layout() {
        let b = block_diagonal(&[Matrix::identity(1, 1) * 2.0, Matrix::identity(2, 2) * 3.0]);
        assert_eq!(b.shape(), (3, 3));
        assert_eq!(b[(0, 0)], 2.0);
        assert_eq!(b[(2, 2)], 3.0);
        assert_eq!(b[(0, 2)], 0.0);
    }
}
