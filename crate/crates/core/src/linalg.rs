//! Dense symmetric helpers: PSD factors with eigenvalue clipping, minimum
//! eigenvalues and null spaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative tolerance below zero accepted before a matrix is called indefinite.
pub const PSD_RELATIVE_TOL: f64 = 1e-8;

/// How negative eigenvalues are treated when factoring a covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipPolicy {
    /// Clip eigenvalues in `[-tol, 0)`, reject anything more negative.
    Strict,
    /// Clip every negative eigenvalue.
    Always,
}

/// `tol_psd` for a matrix whose largest eigenvalue is `max_eig`.
pub fn psd_tolerance(max_eig: f64) -> f64 {
    PSD_RELATIVE_TOL * max_eig.abs().max(f64::MIN_POSITIVE)
}

/// Factor `F` with `F Fᵀ` equal to a covariance after eigenvalue clipping.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    factor: DMatrix<f64>,
    diag: Vec<f64>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

impl PsdFactor {
    pub fn new(cov: DMatrix<f64>, policy: ClipPolicy) -> Result<Self> {
        let n = cov.nrows();
        let eig = SymmetricEigen::new(cov);
        let max_eig = eig.eigenvalues.max();
        let min_eig = eig.eigenvalues.min();
        let tol = psd_tolerance(max_eig);
        if policy == ClipPolicy::Strict && min_eig < -tol {
            return Err(Error::InvalidKernel { min_eigenvalue: min_eig, tolerance: tol });
        }
        let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
        let mut factor = DMatrix::zeros(n, keep.len());
        for (col, &k) in keep.iter().enumerate() {
            let s = eig.eigenvalues[k].sqrt();
            for row in 0..n {
                factor[(row, col)] = eig.eigenvectors[(row, k)] * s;
            }
        }
        let diag = (0..n).map(|row| factor.row(row).iter().map(|v| v * v).sum()).collect();
        Ok(PsdFactor { factor, diag, min_eigenvalue: min_eig, max_eigenvalue: max_eig })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Diagonal of the clipped covariance `F Fᵀ`.
    pub fn variances(&self) -> &[f64] {
        &self.diag
    }

    /// Smallest eigenvalue before clipping.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    /// One centered Gaussian vector with covariance `F Fᵀ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let xi = DVector::from_fn(self.factor.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * xi).iter().copied().collect()
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Orthonormal basis (as columns) of the vectors orthogonal to every
/// constraint, inside `R^dim`. Constraints longer than `dim` are truncated.
pub fn null_space(constraints: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut proj = DMatrix::<f64>::identity(dim, dim);
    // Gram-Schmidt on the constraints, then subtract their span.
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for c in constraints {
        let mut v = DVector::from_fn(dim, |i, _| if i < c.len() { c[i] } else { 0.0 });
        for _ in 0..2 {
            for q in &ortho {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let n = v.norm();
        if n > 1e-12 {
            ortho.push(v / n);
        }
    }
    for q in &ortho {
        proj -= q * q.transpose();
    }
    let eig = SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let cols: Vec<DVector<f64>> = (0..dim)
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            for q in &ortho {
                let d = q.dot(&v);
                v -= q * d;
            }
            let n = v.norm();
            v / n
        })
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
