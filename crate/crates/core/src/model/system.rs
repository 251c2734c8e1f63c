use crate::error::{Error, Result};
use crate::linalg::{check_matrix, spectral_abscissa, Matrix};

/// One admissible pair: the flow generator `Z₁` and the jump map `Z₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub flow: Matrix,
    pub jump: Matrix,
}

impl Mode {
    pub fn new(flow: Matrix, jump: Matrix) -> Self {
        Self { flow, jump }
    }
}

/// Linear switched system with state jumps at switching instants and a
/// minimal dwell time `tau` between consecutive switches.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveSystem {
    dim: usize,
    tau: f64,
    modes: Vec<Mode>,
}

impl ImpulsiveSystem {
    pub fn new(tau: f64, modes: Vec<Mode>) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Invalid(format!("tau must be finite and >= 0, got {tau}")));
        }
        let dim = modes
            .first()
            .ok_or_else(|| Error::Invalid("mode list is empty".into()))?
            .flow
            .nrows();
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            check_matrix(&m.flow, dim, &format!("mode {i}: Z1"))?;
            check_matrix(&m.jump, dim, &format!("mode {i}: Z2"))?;
        }
        Ok(Self { dim, tau, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(tau, self.modes.clone())
    }

    /// `sup α(Z₁)` over the modes.
    pub fn alpha_max(&self) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for m in &self.modes {
            best = best.max(spectral_abscissa(&m.flow)?);
        }
        Ok(best)
    }
}
