use std::cmp::Ordering;

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{Complex, Schur, SymmetricEigen};

use super::{Matrix, NUMERIC};
use crate::error::{Error, Result};

/// Eigenvalues of a real square matrix with the derived radius and abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by decreasing modulus, then decreasing real part, then
    /// decreasing imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub rho: f64,
    pub alpha: f64,
}

fn cmp_eig(a: &Complex<f64>, b: &Complex<f64>) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

/// Eigenvalues (with multiplicity) of `m`.
///
/// Closed form up to `d = 2`; larger matrices are reduced to real Schur
/// form with a budget of `100·d²` QR iterations per attempt.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Domain("eigenvalues of a non-square matrix".into()));
    }
    let d = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("eigenvalues of a non-finite matrix".into()));
    }
    let mut eigs: Vec<Complex<f64>> = match d {
        0 => Vec::new(),
        1 => vec![Complex::new(m[(0, 0)], 0.0)],
        2 => eig2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]).to_vec(),
        _ => schur_eigenvalues(m)?,
    };
    eigs.sort_by(cmp_eig);
    let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let alpha = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(Spectrum {
        eigenvalues: eigs,
        rho,
        alpha,
    })
}

/// Francis QR without exceptional shifts can cycle on particular inputs,
/// so a stalled attempt is retried on similar matrices: balanced first,
/// then unbalanced, then conjugated by a fixed Householder reflection.
fn schur_eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    let d = m.nrows();
    let budget = NUMERIC.eig_sweeps_per_d2 * d * d;
    let mut balanced = m.clone();
    balance_parlett_reinsch(&mut balanced);
    let v = Matrix::from_fn(d, 1, |i, _| 1.0 + i as f64 * 0.618_033_988_749_895);
    let h = Matrix::identity(d, d) - &v * v.transpose() * (2.0 / v.norm_squared());
    let attempts = [balanced, m.clone(), &h * m * &h];
    for work in attempts {
        if let Some(schur) = Schur::try_new(work, f64::EPSILON, budget) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Numerical(format!(
        "QR iteration did not converge in {budget} steps"
    )))
}

// Closed form for 2x2, with the discriminant evaluated in a cancellation-free way.
fn eig2(a: f64, b: f64, c: f64, d: f64) -> [Complex<f64>; 2] {
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // larger-magnitude root first, the other from the determinant
        let r1 = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
        let det = a * d - b * c;
        let r2 = if r1 != 0.0 { det / r1 } else { 0.0 };
        [Complex::new(r1, 0.0), Complex::new(r2, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex::new(half_tr, s), Complex::new(half_tr, -s)]
    }
}

pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.rho)
}

pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.alpha)
}

/// Largest singular value, from the top eigenvalue of `MᵀM`.
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    let n = m.ncols();
    if n == 0 {
        return Ok(0.0);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("norm of a non-finite matrix".into()));
    }
    if n == 1 {
        return Ok(m.column(0).norm());
    }
    // scale to keep MᵀM away from overflow/underflow
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let ms = m / scale;
    let gram = ms.transpose() * &ms;
    let top = if n == 2 {
        let (a, b, d) = (gram[(0, 0)], gram[(0, 1)], gram[(1, 1)]);
        let half_tr = 0.5 * (a + d);
        let half_diff = 0.5 * (a - d);
        half_tr + half_diff.hypot(b)
    } else {
        let budget = NUMERIC.eig_sweeps_per_d2 * n * n;
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, budget)
            .ok_or_else(|| Error::Numerical(format!("symmetric eigen iteration did not converge in {budget} steps")))?;
        eig.eigenvalues.iter().copied().fold(0.0, f64::max)
    };
    Ok(top.max(0.0).sqrt() * scale)
}
