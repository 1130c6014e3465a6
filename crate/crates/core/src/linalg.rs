//! Small dense linear-algebra helpers shared across the crate.
//!
//! Everything here wraps `nalgebra` factorizations with the tolerance
//! conventions used throughout the library: relative thresholds are taken
//! against the largest magnitude present in the input, and symmetric
//! eigenproblems always go through [`sym_eigen`] so eigenvalues come back
//! sorted ascending.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative cutoff under which a singular value or eigenvalue is treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Relative pivot threshold under which a direct solve is declared singular.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("eigendecomposition failed to converge")]
    EigenFailed,
    #[error("matrix is singular at working precision (pivot ratio {ratio:.3e})")]
    Singular { ratio: f64 },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted ascending.
///
/// The input is symmetrized as `(a + a^T)/2` first so callers may pass
/// matrices that are symmetric only up to roundoff.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen requires a square matrix");
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues only, sorted ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    sym_eigen(a).0
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
pub fn sym_spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let vals = sym_eigenvalues(a);
    vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues below `RANK_TOL` times the largest are treated as exact zeros.
pub fn sym_pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let vmax = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let cut = RANK_TOL * vmax.max(1.0e-300);
    let n = a.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = vals[k];
        if v.abs() > cut {
            let col = vecs.column(k);
            inv += col * col.transpose() / v;
        }
    }
    inv
}

/// Numerical rank via singular values with relative tolerance [`RANK_TOL`].
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count()
}

/// Largest singular value of a general matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let svd = a.clone().svd(false, false);
    svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v))
}

/// Direct solve `a x = b` with full pivoting and a relative singularity check.
///
/// The smallest pivot magnitude must exceed [`PIVOT_TOL`] relative to the
/// largest, otherwise the system is reported singular. Suitable for the
/// indefinite saddle systems assembled elsewhere in the crate.
pub fn solve_full_piv(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    assert_eq!(b.len(), n, "right-hand side length mismatch");
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let mut pmin = f64::INFINITY;
    let mut pmax = 0.0f64;
    for i in 0..n {
        let p = u[(i, i)].abs();
        pmin = pmin.min(p);
        pmax = pmax.max(p);
    }
    if pmax == 0.0 || pmin < PIVOT_TOL * pmax {
        return Err(LinalgError::Singular {
            ratio: if pmax == 0.0 { 0.0 } else { pmin / pmax },
        });
    }
    lu.solve(b).ok_or(LinalgError::Singular { ratio: 0.0 })
}

/// Solve a symmetric positive definite system via Cholesky.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or(LinalgError::Singular { ratio: 0.0 })?;
    Ok(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_sorted_and_reconstruct() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen(&a);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!(recon, a, epsilon = 1e-10);
    }

    #[test]
    fn pseudo_inverse_of_singular_psd() {
        // rank-1 projector onto (1,1)/sqrt(2); pinv equals the projector scaled by 1/2
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = sym_pseudo_inverse(&a);
        let expect = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.25, 0.25]);
        assert_relative_eq!(p, expect, epsilon = 1e-12);
        assert_relative_eq!(&a * &p * &a, a, epsilon = 1e-10);
    }

    #[test]
    fn rank_detects_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(rank(&a), 1);
        let b = DMatrix::<f64>::identity(4, 4);
        assert_eq!(rank(&b), 4);
    }

    #[test]
    fn full_piv_solve_flags_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            solve_full_piv(&a, &b),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn full_piv_solve_recovers_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let x = solve_full_piv(&a, &b).unwrap();
        assert_relative_eq!(x[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 3.0, epsilon = 1e-12);
    }
}
