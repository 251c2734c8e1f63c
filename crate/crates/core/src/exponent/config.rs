use crate::error::{Error, Result};

/// Parameters of the word searches, the certification and the bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Longest word explored by the lower-bound search.
    pub max_depth: usize,
    /// Spacing of the time grid used to instantiate flow families.
    pub grid_step: f64,
    /// Largest grid time; certification may raise it for the tail bound.
    pub t_max: f64,
    /// Frontier size cap of the best-first search.
    pub beam_width: usize,
    /// Node budget of every enumeration (search, blocks, closure).
    pub node_budget: usize,
    /// Bisection stops once the bracket is this narrow.
    pub bisect_tol: f64,
    /// A block that reaches this weight without contracting is a failure.
    pub block_horizon: f64,
    /// Contraction factor required from every block, in `(0, 1)`.
    pub margin: f64,
    /// Deepest level of the jump-product boundedness check.
    pub jump_depth: usize,
    /// Seed for the randomized structural checks.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            grid_step: 0.1,
            t_max: 10.0,
            beam_width: 2000,
            node_budget: 200_000,
            bisect_tol: 1e-3,
            block_horizon: 1.0,
            margin: 0.999,
            jump_depth: 8,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Invalid(format!("config: {what}")));
        if self.max_depth == 0 {
            return bad("max_depth must be >= 1");
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return bad("grid_step must be > 0");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be > 0");
        }
        if self.beam_width == 0 || self.node_budget == 0 {
            return bad("beam_width and node_budget must be positive");
        }
        if self.bisect_tol.is_nan() || self.bisect_tol <= 0.0 {
            return bad("bisect_tol must be > 0");
        }
        if !(self.block_horizon > 0.0 && self.block_horizon.is_finite()) {
            return bad("block_horizon must be > 0");
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad("margin must lie in (0, 1)");
        }
        if self.jump_depth == 0 {
            return bad("jump_depth must be >= 1");
        }
        Ok(())
    }
}
