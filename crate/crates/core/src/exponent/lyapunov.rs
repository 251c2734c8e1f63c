use std::collections::VecDeque;

use serde_json::{json, Value};

use super::bounds::grid_letters;
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, to_rows, Matrix, Vector};
use crate::model::{Letter, WeightedSystem};

/// Extremal norm `V(x) = max(|x|, max |Π·x|·e^{γ|ω|})` over a finite set
/// of stored products.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    pub gamma: f64,
    /// `|x| ≤ V(x) ≤ c·|x|`.
    pub c: f64,
    /// Stored products `Π` with their weights `|ω|`; the empty product is
    /// implicit.
    pub products: Vec<(Matrix, f64)>,
}

impl LyapunovCertificate {
    pub fn value(&self, x: &Vector) -> f64 {
        self.products
            .iter()
            .map(|(p, w)| (p * x).norm() * (self.gamma * w).exp())
            .fold(x.norm(), f64::max)
    }

    pub fn to_json(&self) -> Value {
        let products: Vec<Value> = self
            .products
            .iter()
            .map(|(p, w)| json!({"Pi": to_rows(p), "weight": w}))
            .collect();
        json!({"gamma": self.gamma, "c": self.c, "products": products})
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LyapunovFailure {
    /// A product of maximal length still exceeded the prune floor, listed
    /// as `(source, weight)` letters in application order.
    NotClosed { word: Vec<(usize, f64)> },
    /// Node budget exhausted before the closure finished.
    Budget,
}

impl std::fmt::Display for LyapunovFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LyapunovFailure::NotClosed { word } => {
                write!(f, "closure did not terminate; growing word {word:?}")
            }
            LyapunovFailure::Budget => f.write_str("node budget exhausted"),
        }
    }
}

/// Builds an extremal norm in which every letter contracts by `e^{-γ·w}`.
///
/// Products are extended on the right by one letter at a time; a product
/// is stored, and extended further, only while `‖Π‖e^{γ|ω|} > 1`. Products
/// below that floor are dominated by `|x|` and need no entry. Families are
/// sampled on the configured grid, so only their grid letters are covered.
pub fn build_lyapunov(
    ws: &WeightedSystem,
    gamma: f64,
    cfg: &SearchConfig,
) -> Result<std::result::Result<LyapunovCertificate, LyapunovFailure>> {
    cfg.validate()?;
    if !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be finite, got {gamma}")));
    }
    let letters = grid_letters(ws, cfg)?;
    let d = ws.dim();
    let mut queue: VecDeque<(Vec<usize>, Matrix, f64)> = VecDeque::new();
    queue.push_back((Vec::new(), Matrix::identity(d, d), 0.0));
    let mut products = Vec::new();
    let mut c = 1.0f64;
    let mut nodes = 0usize;
    while let Some((path, p, w)) = queue.pop_front() {
        for (k, l) in letters.iter().enumerate() {
            nodes += 1;
            if nodes > cfg.node_budget {
                return Ok(Err(LyapunovFailure::Budget));
            }
            let q = &p * &l.matrix;
            let weight = w + l.weight;
            let scaled = operator_norm(&q)? * (gamma * weight).exp();
            if scaled <= 1.0 {
                continue;
            }
            let mut next = path.clone();
            next.push(k);
            if next.len() > cfg.max_depth || !scaled.is_finite() {
                // `Π·A` applies the new letter first
                let word = next
                    .iter()
                    .rev()
                    .map(|&i| (letters[i].source, letters[i].weight))
                    .collect();
                return Ok(Err(LyapunovFailure::NotClosed { word }));
            }
            c = c.max(scaled);
            products.push((q.clone(), weight));
            queue.push_back((next, q, weight));
        }
    }
    Ok(Ok(LyapunovCertificate { gamma, c, products }))
}

/// Quasi-random points on the unit sphere: Halton points pushed through a
/// Box–Muller transform and normalized.
pub fn sphere_samples(dim: usize, count: usize) -> Vec<Vector> {
    const PRIMES: [u64; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    let pairs = dim.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    let mut idx = 1u64;
    while out.len() < count {
        let mut v = Vector::zeros(dim);
        for p in 0..pairs {
            let u1 = radical_inverse(idx, PRIMES[(2 * p) % PRIMES.len()]);
            let u2 = radical_inverse(idx, PRIMES[(2 * p + 1) % PRIMES.len()]);
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            v[2 * p] = r * theta.cos();
            if 2 * p + 1 < dim {
                v[2 * p + 1] = r * theta.sin();
            }
        }
        idx += 1;
        let n = v.norm();
        if n > 1e-12 {
            out.push(v / n);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub source: usize,
    pub weight: f64,
    pub x: Vector,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub checks: usize,
    /// Largest `V(Ax) / (e^{-γw}V(x))` seen.
    pub worst_ratio: f64,
    pub violations: Vec<Violation>,
}

/// Checks `V(A·x) ≤ e^{-γw}·V(x)` for every letter on `samples` sphere points,
/// with relative slack `1e-9`.
pub fn validate_lyapunov(cert: &LyapunovCertificate, letters: &[Letter], samples: usize) -> Validation {
    let dim = letters.first().map_or(0, |l| l.matrix.nrows());
    let points = sphere_samples(dim, samples);
    let mut checks = 0;
    let mut worst_ratio = 0.0f64;
    let mut violations = Vec::new();
    for l in letters {
        for x in &points {
            let lhs = cert.value(&(&l.matrix * x));
            let rhs = (-cert.gamma * l.weight).exp() * cert.value(x);
            checks += 1;
            worst_ratio = worst_ratio.max(lhs / rhs);
            if lhs > rhs * (1.0 + 1e-9) {
                violations.push(Violation {
                    source: l.source,
                    weight: l.weight,
                    x: x.clone(),
                    lhs,
                    rhs,
                });
            }
        }
    }
    Validation {
        checks,
        worst_ratio,
        violations,
    }
}
