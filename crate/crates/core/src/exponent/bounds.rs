use serde_json::{json, Value};

use super::certify::certify_upper;
use super::search::{search, word_from_indices, SearchOutcome};
use super::SearchConfig;
use crate::error::Result;
use crate::linalg::{mat_exp, operator_norm, spectral_abscissa, Matrix};
use crate::model::{instantiate, lift, Atom, ImpulsiveSystem, Letter, WeightedSystem, Word};
use crate::structure::{jump_products_bounded, JumpBound};

/// Sign verdict on the maximal Lyapunov exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Es,
    Eu,
    Undetermined,
    Infinite,
    MinusInfinity,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Es => "ES",
            Classification::Eu => "EU",
            Classification::Undetermined => "UNDETERMINED",
            Classification::Infinite => "INFINITE",
            Classification::MinusInfinity => "MINUS_INFINITY",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign rule on a finite bracket `[lo, hi]` of the exponent.
pub fn classify(lambda_lo: f64, lambda_hi: f64) -> Classification {
    if lambda_lo == f64::INFINITY {
        Classification::Infinite
    } else if lambda_hi == f64::NEG_INFINITY {
        Classification::MinusInfinity
    } else if lambda_hi < 0.0 {
        Classification::Es
    } else if lambda_lo > 0.0 {
        Classification::Eu
    } else {
        Classification::Undetermined
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub alpha_max: f64,
    pub mu_lo: f64,
    pub class: Classification,
    pub best_word: Option<Word>,
    pub warnings: Vec<String>,
}

/// JSON number, with the infinities spelled `"inf"` and `"-inf"`.
pub fn json_real(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

impl BoundsReport {
    pub fn to_json(&self) -> Value {
        let word: Vec<Value> = self
            .best_word
            .iter()
            .flat_map(|w| w.letters())
            .map(|l| json!({"mode": l.source, "t": l.weight}))
            .collect();
        json!({
            "lambda_lo": json_real(self.lambda_lo),
            "lambda_hi": json_real(self.lambda_hi),
            "alpha_max": json_real(self.alpha_max),
            "mu_lo": json_real(self.mu_lo),
            "class": self.class.as_str(),
            "best_word": word,
            "warnings": self.warnings,
        })
    }
}

/// Largest spectral abscissa of the flow generators.
pub fn alpha_max(sys: &ImpulsiveSystem) -> Result<f64> {
    sys.alpha_max()
}

/// Letters of `ws`, with flow families sampled on the configured grid.
pub fn grid_letters(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<Vec<Letter>> {
    if ws.has_families() {
        instantiate(ws, cfg.grid_step, cfg.t_max)?.letters()
    } else {
        ws.letters()
    }
}

/// Runs the word search on the grid letters of `ws`.
pub fn explore(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<(Vec<Letter>, SearchOutcome)> {
    cfg.validate()?;
    let letters = grid_letters(ws, cfg)?;
    let out = search(&letters, cfg)?;
    Ok((letters, out))
}

/// Best `log ρ(Π)/|ω|` found, which is a lower bound on the exponent, and
/// the word achieving it.
pub fn mu_lower(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<(f64, Option<Word>)> {
    let (letters, out) = explore(ws, cfg)?;
    let word = match &out.best_word {
        Some(w) => Some(word_from_indices(&letters, w)?),
        None => None,
    };
    Ok((out.mu, word))
}

/// Growth of single letters of large weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatLambda {
    /// `max log ‖Z₂e^{t_max Z₁}‖ / t_max` over unbounded families.
    pub estimate: f64,
    /// `max α(Z₁)` over unbounded families with `Z₂ ≠ 0`, the limit bound.
    pub asymptotic: f64,
}

pub fn hat_lambda_estimate(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<HatLambda> {
    let mut estimate = f64::NEG_INFINITY;
    let mut asymptotic = f64::NEG_INFINITY;
    for a in ws.atoms() {
        if let Atom::FlowFamily { flow, jump, t_lo, t_hi } = a {
            if t_hi.is_finite() || jump.iter().all(|v| *v == 0.0) {
                continue;
            }
            let t = cfg.t_max.max(*t_lo).max(f64::MIN_POSITIVE);
            let norm = operator_norm(&(jump * mat_exp(flow, t)?))?;
            estimate = estimate.max(crate::linalg::safe_ln(norm) / t);
            asymptotic = asymptotic.max(spectral_abscissa(flow)?);
        }
    }
    Ok(HatLambda { estimate, asymptotic })
}

/// Smallest `ξ` in `(lo, hi]` (to within `cfg.bisect_tol`) at which the
/// upper bound certifies, or `None` if even expanded seeds fail.
fn bisect_upper(ws: &WeightedSystem, lo: f64, seed: f64, cfg: &SearchConfig) -> Result<Option<f64>> {
    let certifies = |xi: f64| -> Result<bool> { Ok(certify_upper(ws, xi, cfg)?.is_ok()) };
    let mut gap = (seed - lo).max(4.0 * cfg.bisect_tol);
    let mut hi = None;
    for _ in 0..12 {
        if certifies(lo + gap)? {
            hi = Some(lo + gap);
            break;
        }
        gap *= 2.0;
    }
    let Some(mut b) = hi else { return Ok(None) };
    let mut a = lo;
    while b - a > cfg.bisect_tol {
        let mid = 0.5 * (a + b);
        if certifies(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

fn jumps_vanish(sys: &ImpulsiveSystem) -> bool {
    sys.modes().iter().all(|m| m.jump.iter().all(|v| *v == 0.0))
}

/// Bracket of `λ(Σ)` with its sign classification.
///
/// The lower end is `max(α_max, μ)` over the searched words. The upper end
/// is the smallest certified `ξ` found by bisection. With `τ = 0` the jump
/// products are checked first: if they are unbounded, `λ = +∞`.
pub fn lambda_bounds(sys: &ImpulsiveSystem, cfg: &SearchConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let alpha = sys.alpha_max()?;
    let mut warnings = Vec::new();

    if jumps_vanish(sys) {
        // every product of two or more letters vanishes, so λ = α_max
        return Ok(BoundsReport {
            lambda_lo: alpha,
            lambda_hi: alpha,
            alpha_max: alpha,
            mu_lo: f64::NEG_INFINITY,
            class: classify(alpha, alpha),
            best_word: None,
            warnings: vec!["all jump maps vanish; the exponent equals alpha_max".into()],
        });
    }

    let ws = lift(sys);
    let (letters, out) = explore(&ws, cfg)?;
    let best_word = match &out.best_word {
        Some(w) => Some(word_from_indices(&letters, w)?),
        None => None,
    };
    let mu = out.mu;
    let lo = alpha.max(mu);

    let mut unconfirmed = false;
    if sys.tau() == 0.0 {
        let jumps: Vec<Matrix> = sys.modes().iter().map(|m| m.jump.clone()).collect();
        match jump_products_bounded(&jumps, cfg)? {
            JumpBound::Unbounded { word } => {
                warnings.push(format!("jump products are unbounded along modes {word:?}"));
                return Ok(BoundsReport {
                    lambda_lo: f64::INFINITY,
                    lambda_hi: f64::INFINITY,
                    alpha_max: alpha,
                    mu_lo: mu,
                    class: Classification::Infinite,
                    best_word,
                    warnings,
                });
            }
            JumpBound::Unknown => {
                warnings.push("jump-product boundedness undecided; upper bound unconfirmed".into());
                unconfirmed = true;
            }
            JumpBound::Bounded { .. } => {}
        }
    }

    let seed = if sys.tau() > 0.0 {
        let z1 = sys
            .modes()
            .iter()
            .map(|m| operator_norm(&m.flow))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let z2 = sys
            .modes()
            .iter()
            .map(|m| operator_norm(&m.jump))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        z1 + z2.ln().max(0.0) / sys.tau() + 0.1
    } else {
        lo.max(out.norm_growth()) + 1.0
    };
    let hi = if unconfirmed {
        f64::INFINITY
    } else {
        match bisect_upper(&ws, lo, seed, cfg)? {
            Some(hi) => hi,
            None => {
                warnings.push("upper bound could not be certified".into());
                f64::INFINITY
            }
        }
    };
    Ok(BoundsReport {
        lambda_lo: lo,
        lambda_hi: hi.max(lo),
        alpha_max: alpha,
        mu_lo: mu,
        class: classify(lo, hi.max(lo)),
        best_word,
        warnings,
    })
}

/// Whether every product of `len` letters is the zero matrix.
fn products_vanish(letters: &[Letter], len: usize) -> bool {
    fn rec(letters: &[Letter], p: &Matrix, left: usize) -> bool {
        if p.iter().all(|v| *v == 0.0) {
            return true;
        }
        if left == 0 {
            return false;
        }
        letters.iter().all(|l| rec(letters, &(&l.matrix * p), left - 1))
    }
    let d = letters.first().map_or(0, |l| l.matrix.nrows());
    rec(letters, &Matrix::identity(d, d), len)
}

/// Bracket of `λ(Ξ)` for a bare weighted system.
///
/// Reports `MINUS_INFINITY` when all products of `dim` explicit letters
/// vanish, since every longer product then vanishes too.
pub fn weighted_bounds(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let (letters, out) = explore(ws, cfg)?;
    let best_word = match &out.best_word {
        Some(w) => Some(word_from_indices(&letters, w)?),
        None => None,
    };
    let alpha = ws
        .atoms()
        .iter()
        .filter_map(|a| match a {
            Atom::FlowFamily { flow, t_hi, .. } if t_hi.is_infinite() => Some(spectral_abscissa(flow)),
            _ => None,
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if !ws.has_families()
        && crate::exponent::search::word_count(letters.len(), ws.dim()) <= cfg.node_budget
        && products_vanish(&letters, ws.dim())
    {
        return Ok(BoundsReport {
            lambda_lo: f64::NEG_INFINITY,
            lambda_hi: f64::NEG_INFINITY,
            alpha_max: alpha,
            mu_lo: f64::NEG_INFINITY,
            class: Classification::MinusInfinity,
            best_word: None,
            warnings: Vec::new(),
        });
    }
    let mut warnings = Vec::new();
    let growth = out.norm_growth();
    let lo = out.mu;
    let start = if lo.is_finite() { lo } else { growth - 10.0 };
    let hi = if start.is_finite() {
        bisect_upper(ws, start.max(alpha), growth.max(start) + 1.0, cfg)?
    } else {
        None
    };
    let hi = hi.unwrap_or_else(|| {
        warnings.push("upper bound could not be certified".into());
        f64::INFINITY
    });
    Ok(BoundsReport {
        lambda_lo: lo,
        lambda_hi: hi.max(lo),
        alpha_max: alpha,
        mu_lo: lo,
        class: classify(lo, hi.max(lo)),
        best_word,
        warnings,
    })
}
