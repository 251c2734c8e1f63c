use crate::error::Result;
use crate::linalg::{eigenvalues, generalized_eigenspace, Matrix, NUMERIC};

const KERNEL_TOL: f64 = 1e-9;

/// Whether `Z₂` annihilates every generalized eigenvector of `Z₁` whose
/// eigenvalue has maximal real part.
pub fn check_jump_kernel(z1: &Matrix, z2: &Matrix) -> Result<bool> {
    let spectrum = eigenvalues(z1)?;
    let tol = NUMERIC.eig_cluster_tol * z1.amax().max(1.0);
    let dominant: Vec<_> = spectrum
        .eigenvalues
        .iter()
        .filter(|z| z.re >= spectrum.alpha - tol)
        .copied()
        .collect();
    let g = generalized_eigenspace(z1, &dominant)?;
    Ok(g.column_iter().all(|v| (z2 * v).norm() <= KERNEL_TOL))
}
