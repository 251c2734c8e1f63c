use serde_json::{json, Value};

use super::bounds::{explore, hat_lambda_estimate, json_real};
use super::SearchConfig;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::WeightedSystem;
use crate::structure::{is_irreducible, Irreducibility};

/// Depth profile of the gap between norm growth and spectral growth.
///
/// For irreducible systems the norm estimate at depth `k` and the best
/// spectral ratio up to depth `k` approach each other; the gap is expected
/// to shrink with depth (up to the single-letter growth `λ̂`).
#[derive(Debug, Clone, PartialEq)]
pub struct BergerWangReport {
    /// Largest `log ‖Π‖ / |ω|` over words of exactly length `k + 1`.
    pub norm_by_depth: Vec<f64>,
    /// Best `log ρ(Π) / |ω|` over words of length at most `k + 1`.
    pub mu_by_depth: Vec<f64>,
    pub hat_lambda: f64,
    /// `norm_by_depth[k] − max(λ̂, mu_by_depth[k])`.
    pub gap_by_depth: Vec<f64>,
    /// Gap at the deepest level.
    pub gap: f64,
    pub irreducible: bool,
    pub exhaustive: bool,
}

impl BergerWangReport {
    pub fn to_json(&self) -> Value {
        let reals = |v: &[f64]| v.iter().map(|x| json_real(*x)).collect::<Vec<_>>();
        json!({
            "norm_by_depth": reals(&self.norm_by_depth),
            "mu_by_depth": reals(&self.mu_by_depth),
            "hat_lambda": json_real(self.hat_lambda),
            "gap_by_depth": reals(&self.gap_by_depth),
            "gap": json_real(self.gap),
            "irreducible": self.irreducible,
            "exhaustive": self.exhaustive,
        })
    }
}

fn gap(norm: f64, floor: f64) -> f64 {
    if norm == floor {
        0.0
    } else {
        norm - floor
    }
}

pub fn berger_wang_check(ws: &WeightedSystem, cfg: &SearchConfig) -> Result<BergerWangReport> {
    let (letters, out) = explore(ws, cfg)?;
    let hat = hat_lambda_estimate(ws, cfg)?.estimate;
    let mats: Vec<Matrix> = letters.iter().map(|l| l.matrix.clone()).collect();
    let irreducible = matches!(is_irreducible(&mats, cfg.seed)?, Irreducibility::Irreducible);
    let mu_by_depth: Vec<f64> = (1..=out.mu_by_depth.len()).map(|k| out.mu_up_to(k)).collect();
    let gap_by_depth: Vec<f64> = out
        .norm_by_depth
        .iter()
        .zip(&mu_by_depth)
        .map(|(n, m)| gap(*n, hat.max(*m)))
        .collect();
    Ok(BergerWangReport {
        gap: gap_by_depth.last().copied().unwrap_or(f64::INFINITY),
        norm_by_depth: out.norm_by_depth,
        mu_by_depth,
        hat_lambda: hat,
        gap_by_depth,
        irreducible,
        exhaustive: out.exhaustive,
    })
}
