//! Enumeration of words of a weighted system.
//!
//! Small searches are exhaustive depth-first walks, split into prefix tasks
//! that run in parallel. Larger ones fall back to a best-first search on
//! `log ‖Π‖ / |ω|` with a bounded frontier. Either way, every result is
//! reduced in a fixed order by (value descending, word lexicographically
//! ascending), so the outcome does not depend on scheduling.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::SearchConfig;
use crate::error::Result;
use crate::linalg::{operator_norm, safe_ln, spectral_radius, Matrix};
use crate::model::{Letter, Word};

/// Weight used in place of zero when ranking zero-weight words.
const RANK_EPS: f64 = 1e-9;
/// Relative slack when the Frobenius norm is used to skip exact evaluations.
const FRO_SLACK: f64 = 1e-10;
/// Ratios this close (relative) count as tied, so that rounding does not
/// prefer `ωω` over `ω`.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Best `log ρ(Π) / |ω|` over explored words of positive weight.
    pub mu: f64,
    /// Letter indices of the word achieving `mu`.
    pub best_word: Option<Vec<usize>>,
    /// Entry `k` is the best `log ρ(Π) / |ω|` among words of length `k + 1`.
    pub mu_by_depth: Vec<f64>,
    /// Entry `k` is the largest `log ‖Π‖ / |ω|` among words of length `k + 1`.
    pub norm_by_depth: Vec<f64>,
    pub exhaustive: bool,
    pub nodes: usize,
}

impl SearchOutcome {
    /// Best spectral ratio over words of length at most `depth`.
    pub fn mu_up_to(&self, depth: usize) -> f64 {
        self.mu_by_depth
            .iter()
            .take(depth)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Norm-growth estimate at the deepest explored level.
    pub fn norm_growth(&self) -> f64 {
        self.norm_by_depth
            .iter()
            .rev()
            .copied()
            .find(|v| *v > f64::NEG_INFINITY)
            .unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Best {
    value: f64,
    word: Vec<usize>,
}

fn improves(value: f64, word: &[usize], best: &Option<Best>) -> bool {
    if value == f64::NEG_INFINITY {
        return false;
    }
    match best {
        None => true,
        Some(b) => {
            if (value - b.value).abs() <= TIE_TOL * b.value.abs().max(1.0) {
                word < b.word.as_slice()
            } else {
                value.total_cmp(&b.value) == Ordering::Greater
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Stats {
    mu_depth: Vec<f64>,
    norm_depth: Vec<f64>,
    best: Option<Best>,
    nodes: usize,
}

impl Stats {
    fn new(depth: usize) -> Self {
        Self {
            mu_depth: vec![f64::NEG_INFINITY; depth],
            norm_depth: vec![f64::NEG_INFINITY; depth],
            best: None,
            nodes: 0,
        }
    }

    /// Records one word, skipping exact evaluations the Frobenius norm
    /// shows to be useless.
    fn visit(&mut self, path: &[usize], product: &Matrix, weight: f64) -> Result<()> {
        self.nodes += 1;
        if weight <= 0.0 {
            return Ok(());
        }
        let k = path.len() - 1;
        let fro = product.norm();
        if fro == 0.0 {
            return Ok(());
        }
        let cap = (fro * (1.0 + FRO_SLACK)).ln() / weight;
        if cap > self.norm_depth[k] {
            let v = operator_norm(product)?.ln() / weight;
            self.norm_depth[k] = self.norm_depth[k].max(v);
        }
        if cap >= self.mu_depth[k] {
            let v = safe_ln(spectral_radius(product)?) / weight;
            self.mu_depth[k] = self.mu_depth[k].max(v);
            if improves(v, path, &self.best) {
                self.best = Some(Best {
                    value: v,
                    word: path.to_vec(),
                });
            }
        }
        Ok(())
    }

    fn merge(mut self, other: Stats) -> Stats {
        for (a, b) in self.mu_depth.iter_mut().zip(other.mu_depth) {
            *a = a.max(b);
        }
        for (a, b) in self.norm_depth.iter_mut().zip(other.norm_depth) {
            *a = a.max(b);
        }
        if let Some(b) = other.best {
            if improves(b.value, &b.word, &self.best) {
                self.best = Some(b);
            }
        }
        self.nodes += other.nodes;
        self
    }

    fn finish(self, exhaustive: bool) -> SearchOutcome {
        let (mu, best_word) = match self.best {
            Some(b) => (b.value, Some(b.word)),
            None => (f64::NEG_INFINITY, None),
        };
        SearchOutcome {
            mu,
            best_word,
            mu_by_depth: self.mu_depth,
            norm_by_depth: self.norm_depth,
            exhaustive,
            nodes: self.nodes,
        }
    }
}

fn is_zero(m: &Matrix) -> bool {
    m.iter().all(|v| *v == 0.0)
}

/// Number of words of length `1..=depth` over `n` letters, saturating.
pub(crate) fn word_count(n: usize, depth: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level = level.saturating_mul(n);
        total = total.saturating_add(level);
    }
    total
}

/// Explores words of `letters` up to `cfg.max_depth` letters.
pub fn search(letters: &[Letter], cfg: &SearchConfig) -> Result<SearchOutcome> {
    let depth = cfg.max_depth;
    if letters.is_empty() {
        return Ok(Stats::new(depth).finish(true));
    }
    if word_count(letters.len(), depth) <= cfg.node_budget {
        exhaustive(letters, depth)
    } else {
        best_first(letters, cfg)
    }
}

fn dfs(
    letters: &[Letter],
    path: &mut Vec<usize>,
    product: &Matrix,
    weight: f64,
    depth: usize,
    stats: &mut Stats,
) -> Result<()> {
    for (i, l) in letters.iter().enumerate() {
        let p = &l.matrix * product;
        let w = weight + l.weight;
        path.push(i);
        stats.visit(path, &p, w)?;
        if path.len() < depth && !is_zero(&p) {
            dfs(letters, path, &p, w, depth, stats)?;
        }
        path.pop();
    }
    Ok(())
}

fn exhaustive(letters: &[Letter], depth: usize) -> Result<SearchOutcome> {
    let n = letters.len();
    let d = letters[0].matrix.nrows();
    // shortest prefix length giving enough parallel tasks
    let mut split = 1;
    while split < depth && n.saturating_pow(split as u32) < 256 {
        split += 1;
    }
    let mut head = Stats::new(depth);
    if split > 1 {
        dfs(
            letters,
            &mut Vec::new(),
            &Matrix::identity(d, d),
            0.0,
            split - 1,
            &mut head,
        )?;
        head.mu_depth.resize(depth, f64::NEG_INFINITY);
        head.norm_depth.resize(depth, f64::NEG_INFINITY);
    }
    let tasks = n.pow(split as u32);
    let parts: Vec<Result<Stats>> = (0..tasks)
        .into_par_iter()
        .map(|code| {
            let mut path = vec![0usize; split];
            let mut c = code;
            for slot in path.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            let mut product = Matrix::identity(d, d);
            let mut weight = 0.0;
            for &i in &path {
                product = &letters[i].matrix * product;
                weight += letters[i].weight;
            }
            let mut stats = Stats::new(depth);
            stats.visit(&path, &product, weight)?;
            if split < depth && !is_zero(&product) {
                dfs(letters, &mut path, &product, weight, depth, &mut stats)?;
            }
            Ok(stats)
        })
        .collect();
    let mut total = head;
    for p in parts {
        total = total.merge(p?);
    }
    Ok(total.finish(true))
}

#[derive(Debug, Clone, Copy)]
struct Rank(f64);

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Rank {}
impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        // higher scores first
        other.0.total_cmp(&self.0)
    }
}

type Key = (Rank, usize, Vec<usize>);

struct Child {
    path: Vec<usize>,
    product: Matrix,
    weight: f64,
    log_norm: f64,
    log_rho: f64,
}

fn best_first(letters: &[Letter], cfg: &SearchConfig) -> Result<SearchOutcome> {
    let depth = cfg.max_depth;
    let d = letters[0].matrix.nrows();
    let mut stats = Stats::new(depth);
    let mut frontier: BTreeMap<Key, (Matrix, f64)> = BTreeMap::new();
    let mut next: Option<(Vec<usize>, Matrix, f64)> = Some((Vec::new(), Matrix::identity(d, d), 0.0));

    while let Some((path, product, weight)) = next.take() {
        let children: Vec<Result<Child>> = letters
            .par_iter()
            .enumerate()
            .map(|(i, l)| {
                let p = &l.matrix * &product;
                let mut child_path = path.clone();
                child_path.push(i);
                Ok(Child {
                    log_norm: safe_ln(operator_norm(&p)?),
                    log_rho: safe_ln(spectral_radius(&p)?),
                    path: child_path,
                    product: p,
                    weight: weight + l.weight,
                })
            })
            .collect();
        for c in children {
            let c = c?;
            stats.nodes += 1;
            let k = c.path.len() - 1;
            if c.weight > 0.0 {
                stats.norm_depth[k] = stats.norm_depth[k].max(c.log_norm / c.weight);
                let v = c.log_rho / c.weight;
                stats.mu_depth[k] = stats.mu_depth[k].max(v);
                if improves(v, &c.path, &stats.best) {
                    stats.best = Some(Best {
                        value: v,
                        word: c.path.clone(),
                    });
                }
            }
            if c.path.len() < depth && c.log_norm > f64::NEG_INFINITY {
                let score = c.log_norm / c.weight.max(RANK_EPS);
                frontier.insert((Rank(score), c.path.len(), c.path), (c.product, c.weight));
                if frontier.len() > cfg.beam_width {
                    frontier.pop_last();
                }
            }
        }
        if stats.nodes >= cfg.node_budget {
            break;
        }
        next = frontier
            .pop_first()
            .map(|((_, _, path), (product, weight))| (path, product, weight));
    }
    Ok(stats.finish(false))
}

/// Materializes a word from letter indices.
pub fn word_from_indices(letters: &[Letter], indices: &[usize]) -> Result<Word> {
    let dim = letters.first().map_or(0, |l| l.matrix.nrows());
    Word::from_letters(dim, indices.iter().map(|&i| letters[i].clone()))
}
