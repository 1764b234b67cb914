//! Spectral routines for dense Hermitian and real symmetric matrices.
//!
//! Inputs are checked against [`HERMITICITY_TOL`] and then symmetrized before
//! decomposition, so round-off in the strictly-lower triangle never leaks
//! into the spectrum.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::matrix::ComplexMatrix;

/// Max-abs deviation of `m - m^dagger` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let deviation = m.hermiticity_error();
    if deviation > HERMITICITY_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_hermitian(m)?;
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.rows();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.0)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra().singular_values().iter().sum()
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra().singular_values().max()
}

pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
pub fn psd_project(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vecs) = eigh(m)?;
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)] * lambda;
            for j in 0..n {
                out[(i, j)] += vi * vecs[(j, k)].conj();
            }
        }
    }
    Ok(out.hermitian_part())
}

/// Scale-aware PSD tolerance `1e-8 * (1 + ||m||_2)` used by the criteria.
pub fn psd_tolerance(m: &ComplexMatrix) -> f64 {
    1e-8 * (1.0 + spectral_norm(m))
}

/// Routines for real symmetric matrices.
pub mod real {
    use super::*;

    pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
        (m + m.transpose()) * 0.5
    }

    pub fn symmetry_error(m: &DMatrix<f64>) -> f64 {
        if m.nrows() != m.ncols() {
            return f64::INFINITY;
        }
        (m - m.transpose()).amax()
    }

    fn check(m: &DMatrix<f64>) -> Result<()> {
        let deviation = symmetry_error(m);
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    pub fn eigvals(m: &DMatrix<f64>) -> Result<Vec<f64>> {
        check(m)?;
        if m.nrows() == 0 {
            return Ok(Vec::new());
        }
        let mut v: Vec<f64> = SymmetricEigen::new(symmetric_part(m)).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
        Ok(eigvals(m)?.first().copied().unwrap_or(0.0))
    }

    pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
        if m.nrows() == 0 || m.ncols() == 0 {
            return 0.0;
        }
        m.singular_values().iter().sum()
    }

    pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
        if m.nrows() == 0 || m.ncols() == 0 {
            return 0.0;
        }
        m.singular_values().max()
    }

    pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
        Ok(min_eigenvalue(m)? >= -tol)
    }

    /// Frobenius-nearest PSD matrix. Assumes `m` symmetric; no check, since
    /// this sits in the inner loop of the feasibility solver.
    pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
        if m.nrows() == 0 {
            return m.clone();
        }
        let eig = SymmetricEigen::new(symmetric_part(m));
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let v = &eig.eigenvectors;
        let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
        symmetric_part(&out)
    }

    pub fn psd_tolerance(m: &DMatrix<f64>) -> f64 {
        1e-8 * (1.0 + spectral_norm(m))
    }
}
