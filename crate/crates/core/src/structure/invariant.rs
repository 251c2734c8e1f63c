use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    complete_basis, operator_norm, orthonormalize, real_eigen_directions, span_residual, Matrix, Vector,
};

/// Largest admissible component of `A·v` outside a witness subspace,
/// relative to `max(1, ‖A‖)`.
pub const WITNESS_TOL: f64 = 1e-9;
/// Relative residual above which a vector is treated as new during closure.
const CLOSURE_TOL: f64 = 1e-7;
const RANDOM_PRODUCTS: usize = 20;
const RANDOM_VECTORS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Irreducibility {
    /// No candidate produced a proper invariant subspace. The candidate
    /// scheme is randomized, so this verdict is confidence-qualified.
    Irreducible,
    /// Orthonormal basis (columns) of a common proper invariant subspace.
    Reducible(Matrix),
}

/// Simultaneous block upper-triangular form `P·A·P⁻¹` of a matrix family.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagDecomposition {
    /// Orthogonal basis change, so `P⁻¹ = Pᵀ`.
    pub p: Matrix,
    pub block_dims: Vec<usize>,
    /// `blocks[m][i]` is the `i`-th diagonal block of matrix `m`.
    pub blocks: Vec<Vec<Matrix>>,
}

impl FlagDecomposition {
    pub fn transformed(&self, a: &Matrix) -> Matrix {
        &self.p * a * self.p.transpose()
    }

    /// Largest entry of `P·A·P⁻¹` below the block diagonal.
    pub fn lower_residual(&self, a: &Matrix) -> f64 {
        let t = self.transformed(a);
        let mut worst = 0.0f64;
        let mut start = 0;
        for &k in &self.block_dims {
            let end = start + k;
            for i in end..t.nrows() {
                for j in start..end {
                    worst = worst.max(t[(i, j)].abs());
                }
            }
            start = end;
        }
        worst
    }
}

fn check_family(mats: &[Matrix]) -> Result<usize> {
    let n = mats
        .first()
        .ok_or_else(|| Error::Invalid("empty matrix family".into()))?
        .nrows();
    for (i, m) in mats.iter().enumerate() {
        crate::linalg::check_matrix(m, n, &format!("matrix {i}"))?;
    }
    Ok(n)
}

/// Smallest subspace containing the columns of `start` and invariant under
/// every matrix of `mats`.
fn closure(mats: &[Matrix], start: &Matrix) -> Matrix {
    let n = start.nrows();
    let mut basis = orthonormalize(&start.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>());
    let mut fresh: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
    while !fresh.is_empty() && basis.ncols() < n {
        let mut added = Vec::new();
        for v in &fresh {
            for a in mats {
                let w = a * v;
                let scale = w.norm();
                if scale > 0.0 && span_residual(&basis, &w) > CLOSURE_TOL * scale {
                    let mut cols: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
                    cols.push(w);
                    let grown = orthonormalize(&cols);
                    if grown.ncols() > basis.ncols() {
                        added.push(grown.column(grown.ncols() - 1).into_owned());
                        basis = grown;
                    }
                }
            }
        }
        fresh = added;
    }
    basis
}

fn witness_error(mats: &[Matrix], basis: &Matrix) -> Result<f64> {
    let mut worst = 0.0f64;
    for a in mats {
        let scale = operator_norm(a)?.max(1.0);
        for v in basis.column_iter() {
            let w = a * v;
            worst = worst.max(span_residual(basis, &w) / scale);
        }
    }
    Ok(worst)
}

fn candidates(mats: &[Matrix], seed: u64) -> Result<Vec<Matrix>> {
    let n = mats[0].nrows();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources: Vec<Matrix> = mats.to_vec();
    for _ in 0..RANDOM_PRODUCTS {
        let len = rng.gen_range(2..=4);
        let mut p = Matrix::identity(n, n);
        for _ in 0..len {
            p = &mats[rng.gen_range(0..mats.len())] * p;
        }
        sources.push(p);
    }
    for m in &sources {
        for (_, dirs) in real_eigen_directions(m)? {
            out.push(dirs);
        }
    }
    for _ in 0..RANDOM_VECTORS {
        out.push(Matrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0)));
    }
    Ok(out)
}

/// Searches for a common proper invariant subspace.
///
/// The returned witness is the smallest one found and has been checked to
/// be invariant within [`WITNESS_TOL`].
pub fn is_irreducible(mats: &[Matrix], seed: u64) -> Result<Irreducibility> {
    let n = check_family(mats)?;
    if n == 1 {
        return Ok(Irreducibility::Irreducible);
    }
    let mut best: Option<Matrix> = None;
    for start in candidates(mats, seed)? {
        let span = closure(mats, &start);
        let k = span.ncols();
        if k == 0 || k == n || best.as_ref().is_some_and(|b| b.ncols() <= k) {
            continue;
        }
        if witness_error(mats, &span)? <= WITNESS_TOL {
            best = Some(span);
            if k == 1 {
                break;
            }
        }
    }
    Ok(best.map_or(Irreducibility::Irreducible, Irreducibility::Reducible))
}

fn flag_basis(mats: &[Matrix], seed: u64) -> Result<(Matrix, Vec<usize>)> {
    let n = mats[0].nrows();
    let u = match is_irreducible(mats, seed)? {
        Irreducibility::Irreducible => return Ok((Matrix::identity(n, n), vec![n])),
        Irreducibility::Reducible(u) => u,
    };
    let k = u.ncols();
    let w = complete_basis(&u);
    let inner: Vec<Matrix> = mats.iter().map(|a| w.transpose() * a * &w).collect();
    let top: Vec<Matrix> = inner.iter().map(|b| b.view((0, 0), (k, k)).into_owned()).collect();
    let bottom: Vec<Matrix> = inner
        .iter()
        .map(|b| b.view((k, k), (n - k, n - k)).into_owned())
        .collect();
    let (q1, mut dims) = flag_basis(&top, seed)?;
    let (q2, dims2) = flag_basis(&bottom, seed)?;
    dims.extend(dims2);
    let mut q = Matrix::zeros(n, n);
    q.view_mut((0, 0), (k, k)).copy_from(&q1);
    q.view_mut((k, k), (n - k, n - k)).copy_from(&q2);
    Ok((w * q, dims))
}

/// Maximal chain of common invariant subspaces, found by splitting off a
/// witness subspace and recursing on the two diagonal blocks.
pub fn invariant_flag(mats: &[Matrix], seed: u64) -> Result<FlagDecomposition> {
    check_family(mats)?;
    let (q, block_dims) = flag_basis(mats, seed)?;
    let p = q.transpose();
    let blocks = mats
        .iter()
        .map(|a| {
            let t = &p * a * &q;
            let mut start = 0;
            block_dims
                .iter()
                .map(|&k| {
                    let b = t.view((start, start), (k, k)).into_owned();
                    start += k;
                    b
                })
                .collect()
        })
        .collect();
    Ok(FlagDecomposition { p, block_dims, blocks })
}
