//! Certified upper bounds on the Lyapunov exponent of a weighted system.
//!
//! To show `λ(Ξ) ≤ ξ`, every letter is rescaled by `e^{-ξ·weight}` and the
//! rescaled system is shown to be exponentially stable: all words are split
//! greedily into blocks, and each block is proved to contract by the
//! factor `q = cfg.margin`.
//!
//! Flow families `Z₂e^{tZ₁}` are covered by a uniform grid. The letter at
//! grid time `g` stands for the whole cell `(g − h, g]`, and since
//! `Z₂e^{tM} = Z₂e^{gM}e^{-(g-t)M}` its deviation within the cell is at most
//! `‖Z₂e^{gM}‖(e^{h‖M‖} − 1)`. These deviations are propagated through the
//! block products. Block weights are counted at the grid times, which never
//! underestimates the true weight. Times past the grid are covered by the
//! bound `‖Z₂‖e^{-ξt}·exp_norm_bound(Z₁, t)`, which is required to be
//! decreasing there.
//!
//! Letters of weight zero (exact jumps when `τ = 0`) would allow infinite
//! runs of weightless letters. If any of them is not the identity, their
//! products must be bounded, and all norms are then measured in the
//! jump-adapted norm `v(x) = max_{|P| < K} |Px|`, for which every jump is
//! non-expanding. Since weightless jumps may then sit between any two
//! letters, blocks are only bounded letter by letter in that case.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::SearchConfig;
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, operator_norm, spectral_abscissa, Matrix};
use crate::model::{Atom, WeightedSystem};
use crate::structure::{jump_products_bounded, products_up_to, JumpBound};

/// Largest tail start tried before giving up on the tail bound.
const TAIL_LIMIT_FACTOR: f64 = 1e3;
/// Maximum number of grid letters per certification attempt.
const LETTER_LIMIT: usize = 50_000;

/// A certification letter: the rescaled matrix at a grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct CertLetter {
    /// Index of the atom (family or explicit) this letter comes from.
    pub source: usize,
    /// Grid time, used as the weight.
    pub weight: f64,
    /// Width of the parameter cell the letter stands for.
    pub cell: f64,
    /// Bound on the norm of any rescaled matrix in the cell.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Letter indices, first applied first.
    pub word: Vec<usize>,
    /// Certified bound on the norm of any product the block stands for.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperCertificate {
    pub xi: f64,
    pub letters: Vec<CertLetter>,
    pub blocks: Vec<Block>,
    /// `‖Π‖e^{-ξ|ω|} ≤ prefix_constant · q^{#blocks}` for every word.
    pub prefix_constant: f64,
    /// Start of the analytic tail (`None` without unbounded families).
    pub tail_from: Option<f64>,
    /// Sup of the tail letter bound past `tail_from`.
    pub tail_bound: f64,
    /// Whether the jump-adapted norm was needed.
    pub jump_norm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyFailure {
    /// `ξ` does not exceed the spectral abscissa of an unbounded family,
    /// so no decreasing tail bound exists.
    Alpha { source: usize, alpha: f64 },
    /// The enumeration needed more than the node budget.
    Budget,
    /// A block reached the horizon without contracting.
    NoContraction { word: Vec<(usize, f64)>, bound: f64 },
    /// No tail start within the search range makes the tail contract.
    Tail { source: usize },
    /// Weightless jumps whose products are (or may be) unbounded.
    Jumps(JumpBound),
}

impl std::fmt::Display for CertifyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertifyFailure::Alpha { source, alpha } => {
                write!(f, "alpha: atom {source} has spectral abscissa {alpha}")
            }
            CertifyFailure::Budget => write!(f, "budget"),
            CertifyFailure::NoContraction { word, bound } => {
                write!(f, "no-contraction: block {word:?} has bound {bound}")
            }
            CertifyFailure::Tail { source } => write!(f, "tail: atom {source}"),
            CertifyFailure::Jumps(j) => write!(f, "jumps: {j:?}"),
        }
    }
}

struct Family<'a> {
    source: usize,
    flow: &'a Matrix,
    jump: &'a Matrix,
    t_lo: f64,
    t_hi: f64,
}

/// `log` of `‖Z₂‖_v e^{-ξt} exp_norm_bound(Z₁, t)` and whether it is
/// non-increasing on `[t, ∞)`.
fn tail_profile(jump_norm: f64, flow: &Matrix, alpha: f64, xi: f64, t: f64) -> Result<(f64, bool)> {
    let d = flow.nrows();
    let c = d as f64 * operator_norm(flow)?;
    let delta = xi - alpha;
    // p(t) = Σ_{k<d} (ct)^k/k!;  (e^{-δt}p)' has the sign of p' − δp
    let mut term = 1.0;
    let mut poly = 1.0;
    let mut slope = 0.0;
    for k in 1..d {
        slope += c * term; // c·(ct)^{k-1}/(k-1)!
        term *= c * t / k as f64;
        poly += term;
    }
    let decreasing = slope - delta * poly <= 0.0;
    let log_bound = jump_norm.ln() - delta * t + poly.ln();
    Ok((log_bound, decreasing))
}

struct Prepared {
    letters: Vec<CertLetter>,
    mats: Vec<Matrix>,
    errs: Vec<f64>,
    tail: f64,
    tail_from: Option<f64>,
}

#[derive(Default)]
struct Walk {
    blocks: Vec<Block>,
    c_inc: f64,
    stuck: Option<(Vec<usize>, f64)>,
    out_of_budget: bool,
}

impl Walk {
    fn failed(&self) -> bool {
        self.stuck.is_some() || self.out_of_budget
    }
}

struct Ctx<'a> {
    mats: &'a [Matrix],
    norms: Vec<f64>,
    errs: &'a [f64],
    weights: Vec<f64>,
    q: f64,
    horizon: f64,
    budget: usize,
    used: AtomicUsize,
}

impl Ctx<'_> {
    /// Extends the prefix `(p, e, w)` by letter `i`. The true products the
    /// prefix stands for lie within `e` of `p` in norm.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        i: usize,
        path: &mut Vec<usize>,
        p: &Matrix,
        p_norm: f64,
        e: f64,
        w: f64,
        out: &mut Walk,
    ) -> Result<()> {
        if self.used.fetch_add(1, Ordering::Relaxed) >= self.budget {
            out.out_of_budget = true;
            return Ok(());
        }
        let np = &self.mats[i] * p;
        let ne = self.norms[i] * e + self.errs[i] * (p_norm + e);
        let nn = operator_norm(&np)?;
        let b = nn + ne;
        let nw = w + self.weights[i];
        path.push(i);
        if b <= self.q {
            out.blocks.push(Block {
                word: path.clone(),
                bound: b,
            });
        } else if nw >= self.horizon || !b.is_finite() {
            out.stuck = Some((path.clone(), b));
        } else {
            out.c_inc = out.c_inc.max(b);
            for j in 0..self.mats.len() {
                if out.failed() {
                    break;
                }
                self.step(j, path, &np, nn, ne, nw, out)?;
            }
        }
        path.pop();
        Ok(())
    }
}

fn run_walk(
    mats: &[Matrix],
    errs: &[f64],
    letters: &[CertLetter],
    cfg: &SearchConfig,
) -> Result<std::result::Result<Walk, CertifyFailure>> {
    let mut total = Walk {
        c_inc: 1.0,
        ..Default::default()
    };
    if mats.is_empty() {
        return Ok(Ok(total));
    }
    let d = mats[0].nrows();
    let ctx = Ctx {
        mats,
        norms: mats.iter().map(operator_norm).collect::<Result<_>>()?,
        errs,
        weights: letters.iter().map(|l| l.weight).collect(),
        q: cfg.margin,
        horizon: cfg.block_horizon.max(2.0 * min_positive_weight(letters)),
        budget: cfg.node_budget,
        used: AtomicUsize::new(0),
    };
    // subtrees below distinct first letters are independent
    let parts: Vec<Result<Walk>> = (0..mats.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Walk::default();
            ctx.step(i, &mut Vec::new(), &Matrix::identity(d, d), 1.0, 0.0, 0.0, &mut out)?;
            Ok(out)
        })
        .collect();
    for part in parts {
        let part = part?;
        if let Some((word, bound)) = part.stuck {
            let word = word.iter().map(|&i| (letters[i].source, letters[i].weight)).collect();
            return Ok(Err(CertifyFailure::NoContraction { word, bound }));
        }
        if part.out_of_budget {
            return Ok(Err(CertifyFailure::Budget));
        }
        total.blocks.extend(part.blocks);
        total.c_inc = total.c_inc.max(part.c_inc);
    }
    Ok(Ok(total))
}

fn prepare(
    families: &[Family],
    explicit: &[(usize, &Matrix, f64)],
    xi: f64,
    cfg: &SearchConfig,
    tail_from: &[f64],
    jump_set: Option<&[Matrix]>,
) -> Result<Option<Prepared>> {
    let h = cfg.grid_step;
    let v_norm = |a: &Matrix| -> Result<f64> {
        match jump_set {
            None => operator_norm(a),
            Some(s) => s
                .iter()
                .try_fold(0.0f64, |acc, p| Ok(acc.max(operator_norm(&(p * a))?))),
        }
    };
    let mut letters = Vec::new();
    let mut mats = Vec::new();
    let mut errs = Vec::new();
    let mut tail = 0.0f64;
    let mut any_tail = None;
    for &(source, a, w) in explicit {
        if w == 0.0 {
            continue;
        }
        let m = a * (-xi * w).exp();
        let bound = v_norm(&m)?;
        letters.push(CertLetter {
            source,
            weight: w,
            cell: 0.0,
            bound,
        });
        mats.push(m);
        errs.push(0.0);
    }
    for (f, &t0) in families.iter().zip(tail_from) {
        let n = f.flow.nrows();
        let m = f.flow - Matrix::identity(n, n) * xi;
        let m_norm = operator_norm(&m)?;
        let upper = f.t_hi.min(t0);
        let count = ((upper - f.t_lo) / h).floor() as usize + 2;
        if letters.len() + count > LETTER_LIMIT {
            return Ok(None);
        }
        let mut prev: Option<f64> = None;
        let mut j = 0usize;
        loop {
            let mut g = f.t_lo + j as f64 * h;
            if g > upper - 1e-9 * h {
                g = upper;
            }
            let cell = prev.map_or(0.0, |p| g - p);
            if g > 0.0 {
                let l = f.jump * mat_exp(&m, g)?;
                let grid_norm = v_norm(&l)?;
                let inflate = (cell * m_norm).exp_m1();
                letters.push(CertLetter {
                    source: f.source,
                    weight: g,
                    cell,
                    bound: grid_norm * (1.0 + inflate),
                });
                errs.push(grid_norm * inflate);
                mats.push(l);
            }
            prev = Some(g);
            if g >= upper {
                break;
            }
            j += 1;
        }
        if f.t_hi > t0 {
            let alpha = spectral_abscissa(f.flow)?;
            let (log_b, _) = tail_profile(v_norm(f.jump)?, f.flow, alpha, xi, t0)?;
            tail = tail.max(log_b.exp());
            any_tail = Some(any_tail.map_or(t0, |x: f64| x.max(t0)));
        }
    }
    Ok(Some(Prepared {
        letters,
        mats,
        errs,
        tail,
        tail_from: any_tail,
    }))
}

/// Tries to prove `λ(ws) ≤ xi`.
///
/// `Ok(Err(_))` is a failed attempt (the exponent may still be below
/// `xi`); `Err(_)` is a numerical or input error.
pub fn certify_upper(
    ws: &WeightedSystem,
    xi: f64,
    cfg: &SearchConfig,
) -> Result<std::result::Result<UpperCertificate, CertifyFailure>> {
    cfg.validate()?;
    if !xi.is_finite() {
        return Err(Error::Domain(format!("cannot certify at xi = {xi}")));
    }
    if !ws.tails().is_empty() {
        return Err(Error::Domain(
            "certification needs the system before instantiation".into(),
        ));
    }
    let q = cfg.margin;
    let mut families = Vec::new();
    let mut explicit = Vec::new();
    let mut jumps: Vec<Matrix> = Vec::new();
    for (i, a) in ws.atoms().iter().enumerate() {
        match a {
            Atom::Explicit { matrix, weight, origin } => {
                if origin.is_some_and(|o| o.cell > 0.0) {
                    return Err(Error::Domain(format!(
                        "atom {i} stands for a parameter cell; certify the uninstantiated system"
                    )));
                }
                if *weight == 0.0 && *matrix != Matrix::identity(ws.dim(), ws.dim()) {
                    jumps.push(matrix.clone());
                }
                explicit.push((i, matrix, *weight));
            }
            Atom::FlowFamily { flow, jump, t_lo, t_hi } => {
                if *t_hi > cfg.t_max {
                    let alpha = spectral_abscissa(flow)?;
                    if xi <= alpha {
                        return Ok(Err(CertifyFailure::Alpha { source: i, alpha }));
                    }
                }
                if *t_lo == 0.0 && *jump != Matrix::identity(ws.dim(), ws.dim()) {
                    jumps.push(jump.clone());
                }
                families.push(Family {
                    source: i,
                    flow,
                    jump,
                    t_lo: *t_lo,
                    t_hi: *t_hi,
                });
            }
        }
    }

    let (jump_set, norm_constant) = if jumps.is_empty() {
        (None, 1.0)
    } else {
        match jump_products_bounded(&jumps, cfg)? {
            JumpBound::Bounded { c, depth } => {
                let set: Vec<Matrix> = products_up_to(&jumps, depth - 1).into_iter().map(|(_, p)| p).collect();
                (Some(set), c)
            }
            other => return Ok(Err(CertifyFailure::Jumps(other))),
        }
    };

    // tail starts: decreasing and below the target
    let mut target = q;
    let mut starts: Vec<f64> = Vec::with_capacity(families.len());
    for attempt in 0..6 {
        starts.clear();
        for f in &families {
            let mut t0 = cfg.t_max.max(f.t_lo);
            if f.t_hi > t0 {
                let alpha = spectral_abscissa(f.flow)?;
                let jn = match &jump_set {
                    None => operator_norm(f.jump)?,
                    Some(s) => s
                        .iter()
                        .try_fold(0.0f64, |acc, p| Ok::<_, Error>(acc.max(operator_norm(&(p * f.jump))?)))?,
                };
                loop {
                    let (log_b, decreasing) = tail_profile(jn, f.flow, alpha, xi, t0)?;
                    if decreasing && log_b <= target.ln() {
                        break;
                    }
                    t0 *= 1.25;
                    if t0 > TAIL_LIMIT_FACTOR * cfg.t_max {
                        return Ok(Err(CertifyFailure::Tail { source: f.source }));
                    }
                }
            }
            starts.push(t0);
        }
        let prep = match prepare(&families, &explicit, xi, cfg, &starts, jump_set.as_deref())? {
            Some(p) => p,
            None => return Ok(Err(CertifyFailure::Budget)),
        };
        let walk = if jump_set.is_some() {
            // letter-by-letter bounds: run the same walk on 1×1 matrices
            let scalars: Vec<Matrix> = prep
                .letters
                .iter()
                .map(|l| Matrix::from_element(1, 1, l.bound))
                .collect();
            let zeros = vec![0.0; scalars.len()];
            run_walk(&scalars, &zeros, &prep.letters, cfg)?
        } else {
            run_walk(&prep.mats, &prep.errs, &prep.letters, cfg)?
        };
        let walk = match walk {
            Ok(w) => w,
            Err(fail) => return Ok(Err(fail)),
        };
        let c_inc = walk.c_inc.max(1.0);
        if prep.tail * c_inc <= q {
            return Ok(Ok(UpperCertificate {
                xi,
                letters: prep.letters,
                blocks: walk.blocks,
                prefix_constant: c_inc * norm_constant,
                tail_from: prep.tail_from,
                tail_bound: prep.tail,
                jump_norm: jump_set.is_some(),
            }));
        }
        if attempt == 5 {
            break;
        }
        target = q / c_inc / 2.0;
    }
    Ok(Err(CertifyFailure::Tail {
        source: families.first().map_or(0, |f| f.source),
    }))
}

fn min_positive_weight(letters: &[CertLetter]) -> f64 {
    letters
        .iter()
        .map(|l| l.weight)
        .filter(|w| *w > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1e300)
}
