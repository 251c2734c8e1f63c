use super::{operator_norm, spectral_abscissa, Matrix, NUMERIC};
use crate::error::{Error, Result};

/// `e^{tM}` by scaling and squaring around a truncated Taylor series.
///
/// The argument is scaled by `2^-s` so that its Frobenius norm is at most
/// `NUMERIC.expm_scale_target`, summed until the next term is below machine
/// precision, then squared `s` times.
pub fn mat_exp(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Domain("exponential of a non-square matrix".into()));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("exponential at non-finite time {t}")));
    }
    let n = m.nrows();
    let a = m * t;
    let norm = a.norm();
    if !norm.is_finite() {
        return Err(Error::Overflow("t·M is not finite".into()));
    }
    if norm == 0.0 {
        return Ok(Matrix::identity(n, n));
    }
    // e^{‖tM‖} bounds the result, so the spectral check is only needed past it
    if norm > NUMERIC.overflow_exponent {
        let growth = spectral_abscissa(&a)?;
        if growth > NUMERIC.overflow_exponent {
            return Err(Error::Overflow(format!(
                "t·alpha(M) = {growth:.3} exceeds {}",
                NUMERIC.overflow_exponent
            )));
        }
    }

    let squarings = if norm > NUMERIC.expm_scale_target {
        (norm / NUMERIC.expm_scale_target).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let mut sum = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=NUMERIC.expm_max_terms {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.norm() <= f64::EPSILON * 0.25 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("matrix exponential overflowed".into()));
    }
    Ok(sum)
}

/// Upper bound `e^{tα(M)} Σ_{k<d} (t·d·‖M‖)^k / k!` on `‖e^{tM}‖` for `t >= 0`.
pub fn exp_norm_bound(m: &Matrix, t: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!("exp_norm_bound needs t >= 0, got {t}")));
    }
    let d = m.nrows();
    if d == 0 {
        return Ok(1.0);
    }
    let alpha = spectral_abscissa(m)?;
    let rate = t * d as f64 * operator_norm(m)?;
    let mut term = 1.0;
    let mut poly = 1.0;
    for k in 1..d {
        term *= rate / k as f64;
        poly += term;
    }
    Ok((t * alpha).exp() * poly)
}
