use crate::error::Result;
use crate::exponent::SearchConfig;
use crate::linalg::{operator_norm, spectral_radius, Matrix};

const RHO_SLACK: f64 = 1e-9;
const NORM_SLACK: f64 = 1e-12;

/// Verdict on the semigroup generated by a set of jump matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpBound {
    /// Every product of exactly `depth` letters has norm at most one, so
    /// all products are bounded by `c`, the largest norm among the shorter
    /// ones (the identity included).
    Bounded {
        c: f64,
        depth: usize,
    },
    /// Repeating `word` (letter indices, first applied first) grows
    /// without bound.
    Unbounded {
        word: Vec<usize>,
    },
    Unknown,
}

/// All products of at most `len` letters, the empty product first, in
/// lexicographic order of their words.
pub fn products_up_to(mats: &[Matrix], len: usize) -> Vec<(Vec<usize>, Matrix)> {
    let d = mats.first().map_or(0, |m| m.nrows());
    let mut all = vec![(Vec::new(), Matrix::identity(d, d))];
    let mut level = all.clone();
    for _ in 0..len {
        let mut next = Vec::with_capacity(level.len() * mats.len());
        for (w, p) in &level {
            for (i, m) in mats.iter().enumerate() {
                let mut word = w.clone();
                word.push(i);
                next.push((word, m * p));
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

fn power_norms(p: &Matrix) -> Result<(f64, f64)> {
    let mut q = p.clone();
    for _ in 0..6 {
        q = &q * &q;
    }
    let n64 = operator_norm(&q)?;
    let n128 = operator_norm(&(&q * &q))?;
    Ok((n64, n128))
}

/// Decides whether all finite products of `mats` stay bounded.
///
/// Levels `K = 1, 2, …, cfg.jump_depth` are enumerated exhaustively. A
/// product with spectral radius above one proves unboundedness; a level
/// whose products are all non-expanding proves boundedness, because then
/// `v(x) = max_{|P| < K} |Px|` is a norm every letter is non-expanding for.
/// When neither happens, short words with spectral radius one are tested
/// for polynomial growth of their powers.
pub fn jump_products_bounded(mats: &[Matrix], cfg: &SearchConfig) -> Result<JumpBound> {
    let d = mats.first().map_or(0, |m| m.nrows());
    let mut level = vec![(Vec::<usize>::new(), Matrix::identity(d, d))];
    let mut shorter_max = 1.0f64;
    let mut marginal = Vec::new();
    for depth in 1..=cfg.jump_depth {
        if level.len().saturating_mul(mats.len()) > cfg.node_budget {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * mats.len());
        let mut level_max = 0.0f64;
        for (w, p) in &level {
            for (i, m) in mats.iter().enumerate() {
                let mut word = w.clone();
                word.push(i);
                let q = m * p;
                let rho = spectral_radius(&q)?;
                if rho > 1.0 + RHO_SLACK {
                    return Ok(JumpBound::Unbounded { word });
                }
                if depth <= 2 && rho >= 1.0 - RHO_SLACK {
                    marginal.push((word.clone(), q.clone()));
                }
                level_max = level_max.max(operator_norm(&q)?);
                next.push((word, q));
            }
        }
        if level_max <= 1.0 + NORM_SLACK {
            return Ok(JumpBound::Bounded { c: shorter_max, depth });
        }
        shorter_max = shorter_max.max(level_max);
        level = next;
    }
    for (word, p) in marginal {
        let (n64, n128) = power_norms(&p)?;
        if n128 > 10.0 && n128 >= 1.5 * n64 {
            return Ok(JumpBound::Unbounded { word });
        }
    }
    Ok(JumpBound::Unknown)
}
