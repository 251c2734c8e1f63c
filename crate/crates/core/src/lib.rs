//! Stability analysis for linear switched systems with state jumps.
//!
//! A system is a finite set of modes `(Z₁, Z₂)` and a dwell time `τ`: the
//! state follows `ẋ = Z₁x` for at least `τ` time units, then jumps to `Z₂x`
//! and a new mode is selected. The analysis works on the lifted weighted
//! system `{(Z₂e^{tZ₁}, t) : t ≥ τ}` and brackets the maximal Lyapunov
//! exponent `λ` between a spectral lower bound and a certified upper bound.

pub mod error;
pub mod exponent;
pub mod linalg;
pub mod model;
pub mod structure;

pub use error::{Error, Result};
