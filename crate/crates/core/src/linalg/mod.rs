//! Dense small-dimension real matrix kernel.
//!
//! Everything here is a pure function of its arguments. Matrices are plain
//! `nalgebra::DMatrix<f64>`; the square/finite invariant is checked at the
//! boundaries (parsers, constructors) through [`check_matrix`].

mod eigen;
mod expm;
mod subspace;

pub use eigen::{eigenvalues, operator_norm, spectral_abscissa, spectral_radius, Spectrum};
pub use expm::{exp_norm_bound, mat_exp};
pub use subspace::{
    complete_basis, generalized_eigenspace, null_space, orthonormalize, real_eigen_directions, span_residual,
};

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
pub use nalgebra::Complex;

/// Tolerances and budgets shared by the numerical routines.
#[derive(Debug, Clone, Copy)]
pub struct NumericConfig {
    /// QR iteration budget is `eig_sweeps_per_d2 * d * d`.
    pub eig_sweeps_per_d2: usize,
    /// Scaling target for the exponential: `‖tM / 2^s‖_F <= expm_scale_target`.
    pub expm_scale_target: f64,
    /// Largest admissible `t·α(M)` before `mat_exp` reports overflow.
    pub overflow_exponent: f64,
    /// Maximum number of Taylor terms in the scaled exponential.
    pub expm_max_terms: usize,
    /// Relative threshold under which a vector is considered inside a span.
    pub span_tol: f64,
    /// Absolute tolerance used for clustering eigenvalues.
    pub eig_cluster_tol: f64,
}

pub const NUMERIC: NumericConfig = NumericConfig {
    eig_sweeps_per_d2: 100,
    expm_scale_target: 0.5,
    overflow_exponent: 700.0,
    expm_max_terms: 40,
    span_tol: 1e-8,
    eig_cluster_tol: 1e-6,
};

/// Checks that `m` is `dim × dim` with finite entries.
pub fn check_matrix(m: &Matrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Invalid(format!(
            "{what}: expected {dim}x{dim} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// Builds a square matrix from row-major nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Invalid(format!("row {i} has {} entries, expected {n}", r.len())));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Row-major nested rows of `m`.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// `log ‖·‖` style helper with `log 0 = -∞`.
pub fn safe_ln(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}
