use nalgebra::{Complex, SVD};

use super::{eigenvalues, Matrix, Vector, NUMERIC};
use crate::error::{Error, Result};

/// Orthonormal basis (as columns) of the right singular vectors belonging to
/// the `k` smallest singular values of `m`.
pub fn null_space(m: &Matrix, k: usize) -> Result<Matrix> {
    let n = m.ncols();
    if k > n {
        return Err(Error::Domain(format!("null space of dimension {k} > {n}")));
    }
    if k == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let scale = m.amax();
    let work = if scale > 0.0 { m / scale } else { m.clone() };
    let budget = NUMERIC.eig_sweeps_per_d2 * n * n;
    let svd = SVD::try_new(work, false, true, f64::EPSILON, budget)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right vectors".into()))?;
    // try_new sorts singular values in decreasing order
    let mut out = Matrix::zeros(n, k);
    for (c, row) in (n - k..n).enumerate() {
        let mut v: Vector = v_t.row(row).transpose();
        canonical_sign(&mut v);
        out.set_column(c, &v);
    }
    Ok(out)
}

/// Flips `v` so that its first entry of significant size is positive.
pub(crate) fn canonical_sign(v: &mut Vector) {
    let max = v.amax();
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-8 * max) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Distance from `v` to the column span of the orthonormal `basis`.
pub fn span_residual(basis: &Matrix, v: &Vector) -> f64 {
    if basis.ncols() == 0 {
        return v.norm();
    }
    let coeffs = basis.transpose() * v;
    (v - basis * coeffs).norm()
}

/// Gram-Schmidt (twice) over `vectors`, dropping any whose relative residual
/// falls below `NUMERIC.span_tol`.
pub fn orthonormalize(vectors: &[Vector]) -> Matrix {
    let n = vectors.first().map_or(0, |v| v.len());
    let mut cols: Vec<Vector> = Vec::new();
    for v in vectors {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let mut w = v / norm;
        for _ in 0..2 {
            for q in &cols {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let r = w.norm();
        if r > NUMERIC.span_tol {
            cols.push(w / r);
        }
    }
    if cols.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Extends the orthonormal columns of `basis` to an orthonormal basis of ℝⁿ,
/// keeping the given columns first.
pub fn complete_basis(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    let mut vectors: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
    let k = vectors.len();
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        vectors.push(e);
    }
    let q = orthonormalize(&vectors);
    debug_assert!(q.ncols() == n && k <= n);
    q
}

/// Real directions attached to each eigenvalue of `m`, in spectrum order.
///
/// A real eigenvalue yields one eigenvector; a complex pair (reported once,
/// for the member with positive imaginary part) yields an orthonormal basis
/// of the 2-dimensional real invariant subspace spanned by the real and
/// imaginary parts of its eigenvector.
pub fn real_eigen_directions(m: &Matrix) -> Result<Vec<(Complex<f64>, Matrix)>> {
    let n = m.nrows();
    let spectrum = eigenvalues(m)?;
    let scale = m.amax().max(1.0);
    let mut out = Vec::new();
    for z in &spectrum.eigenvalues {
        if z.im.abs() <= NUMERIC.eig_cluster_tol * scale {
            let shifted = m - Matrix::identity(n, n) * z.re;
            out.push((Complex::new(z.re, 0.0), null_space(&shifted, 1)?));
        } else if z.im > 0.0 {
            let quad = m * m - m * (2.0 * z.re) + Matrix::identity(n, n) * z.norm_sqr();
            out.push((*z, null_space(&quad, 2)?));
        }
    }
    Ok(out)
}

/// Orthonormal basis of the real generalized eigenspace of `m` for the
/// eigenvalues in `selected` (with multiplicity, conjugates included).
///
/// Computed as the kernel of `∏ (M − λI)^{m_λ} ∏ (M² − 2Re λ M + |λ|² I)^{m_λ}`
/// over clustered eigenvalues, taking as many singular directions as the
/// selected algebraic multiplicity.
pub fn generalized_eigenspace(m: &Matrix, selected: &[Complex<f64>]) -> Result<Matrix> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let tol = NUMERIC.eig_cluster_tol * scale;
    let mut real_clusters: Vec<(f64, usize)> = Vec::new();
    let mut complex_clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for z in selected {
        if z.im.abs() <= tol {
            match real_clusters.iter_mut().find(|(c, _)| (c - z.re).abs() <= tol) {
                Some(c) => c.1 += 1,
                None => real_clusters.push((z.re, 1)),
            }
        } else if z.im > 0.0 {
            match complex_clusters.iter_mut().find(|(c, _)| (c - z).norm() <= tol) {
                Some(c) => c.1 += 1,
                None => complex_clusters.push((*z, 1)),
            }
        }
    }
    let dim: usize =
        real_clusters.iter().map(|c| c.1).sum::<usize>() + 2 * complex_clusters.iter().map(|c| c.1).sum::<usize>();
    if dim == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let id = Matrix::identity(n, n);
    let mut poly = id.clone();
    for (lam, mult) in &real_clusters {
        let f = m - &id * *lam;
        for _ in 0..*mult {
            poly = &f * poly;
        }
    }
    for (lam, mult) in &complex_clusters {
        let f = m * m - m * (2.0 * lam.re) + &id * lam.norm_sqr();
        for _ in 0..*mult {
            poly = &f * poly;
        }
    }
    null_space(&poly, dim.min(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let k = null_space(&m, 1).unwrap();
        let v = k.column(0);
        assert!((v[0] + v[1]).abs() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn completion_is_orthonormal() {
        let b = orthonormalize(&[Vector::from_vec(vec![1.0, 1.0, 0.0])]);
        let q = complete_basis(&b);
        assert_eq!(q.ncols(), 3);
        assert!((q.transpose() * &q - Matrix::identity(3, 3)).amax() < 1e-14);
        assert!((q.column(0) - b.column(0)).amax() < 1e-15);
    }

    #[test]
    fn directions_of_rotation_span_plane() {
        let r = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let dirs = real_eigen_directions(&r).unwrap();
        assert_eq!(dirs.len(), 1);
        assert_eq!(dirs[0].1.ncols(), 2);
    }

    #[test]
    fn generalized_space_of_jordan_block() {
        // eigenvalue 0 with a length-2 chain plus -1
        let m = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let g = generalized_eigenspace(&m, &[Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)]).unwrap();
        assert_eq!(g.ncols(), 2);
        let e3 = Vector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((g.transpose() * e3).norm() < 1e-12);
    }
}
