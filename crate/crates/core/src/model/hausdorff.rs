use super::{ImpulsiveSystem, Mode};
use crate::error::{Error, Result};

fn mode_distance(a: &Mode, b: &Mode) -> f64 {
    ((&a.flow - &b.flow).norm_squared() + (&a.jump - &b.jump).norm_squared()).sqrt()
}

/// Hausdorff distance between the mode sets, each mode `(Z₁, Z₂)` seen as
/// the point of `ℝ^{2d²}` made of its entries.
pub fn hausdorff_distance(x: &ImpulsiveSystem, y: &ImpulsiveSystem) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Domain(format!("dimension mismatch: {} vs {}", x.dim(), y.dim())));
    }
    let directed = |a: &[Mode], b: &[Mode]| {
        a.iter()
            .map(|p| b.iter().map(|q| mode_distance(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(x.modes(), y.modes()).max(directed(y.modes(), x.modes())))
}
