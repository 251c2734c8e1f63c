use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, mat_exp, null_space, operator_norm, Matrix, Vector, NUMERIC};
use crate::model::{flow, ImpulsiveSystem, Segment, SwitchingSignal, Word};

/// Periodic switching signal with an initial state whose trajectory grows
/// at least like `c·ρ^n` after `n` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct EuWitness {
    /// One period; empty for a constant signal.
    pub pattern: Vec<Segment>,
    /// Mode after the last period (the constant mode when `pattern` is empty).
    pub tail_mode: usize,
    pub period: f64,
    pub x0: Vector,
    /// Spectral radius of the one-period transition matrix.
    pub rho: f64,
    /// `|Π^n x₀| ≥ c·ρ^n·|x₀|` for every `n`.
    pub c: f64,
}

impl EuWitness {
    /// `log ρ / period`, the guaranteed growth rate.
    pub fn rate(&self) -> f64 {
        self.rho.ln() / self.period
    }

    /// Time at which `periods` periods are complete (right after the last
    /// jump), summed the same way the flow accumulates switching times.
    pub fn end_time(&self, periods: usize) -> f64 {
        if self.pattern.is_empty() {
            periods as f64 * self.period
        } else {
            self.signal(periods).total_duration()
        }
    }

    pub fn signal(&self, periods: usize) -> SwitchingSignal {
        if self.pattern.is_empty() {
            SwitchingSignal::constant(self.tail_mode)
        } else {
            SwitchingSignal::periodic(&self.pattern, periods, self.tail_mode)
        }
    }
}

/// Dominant real direction of `p`: an eigenvector for a real dominant
/// eigenvalue (`c = 1`), or a vector in the invariant plane of a dominant
/// complex pair with `c` the inverse condition number of the rotation
/// basis of that plane.
fn dominant_direction(p: &Matrix) -> Result<(Vector, f64, f64)> {
    let n = p.nrows();
    let spectrum = eigenvalues(p)?;
    let tol = NUMERIC.eig_cluster_tol * spectrum.rho.max(1.0);
    let dominant: Vec<Complex<f64>> = spectrum
        .eigenvalues
        .iter()
        .filter(|z| z.norm() >= spectrum.rho - tol)
        .copied()
        .collect();
    let id = Matrix::identity(n, n);
    if let Some(z) = dominant.iter().find(|z| z.im.abs() <= tol) {
        let v = null_space(&(p - &id * z.re), 1)?;
        return Ok((v.column(0).into_owned(), 1.0, spectrum.rho));
    }
    let z = dominant
        .iter()
        .find(|z| z.im > 0.0)
        .copied()
        .ok_or_else(|| Error::Numerical("no dominant eigenvalue found".into()))?;
    let quad = p * p - p * (2.0 * z.re) + &id * z.norm_sqr();
    let q = null_space(&quad, 2)?;
    let r = q.transpose() * p * &q;
    // eigenvector u of the 2×2 block R for z; S = [Re u, Im u] conjugates
    // R to ρ times a rotation
    let (u0, u1) = if r[(0, 1)].abs() >= r[(1, 0)].abs() {
        (Complex::new(r[(0, 1)], 0.0), z - r[(0, 0)])
    } else {
        (z - r[(1, 1)], Complex::new(r[(1, 0)], 0.0))
    };
    let s = Matrix::from_row_slice(2, 2, &[u0.re, u0.im, u1.re, u1.im]);
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("degenerate rotation basis".into()))?;
    let c = (1.0 / (operator_norm(&s)? * operator_norm(&s_inv)?)).min(1.0);
    Ok((q.column(0).into_owned(), c, spectrum.rho))
}

/// Growth witness from a word of the lifted system, read as the periodic
/// signal that plays the word's `(mode, duration)` letters in order.
pub fn eu_witness(sys: &ImpulsiveSystem, word: &Word) -> Result<EuWitness> {
    if word.is_empty() {
        return Err(Error::Domain("witness needs a non-empty word".into()));
    }
    let pattern: Vec<Segment> = word
        .letters()
        .iter()
        .map(|l| Segment {
            mode: l.source,
            duration: l.weight,
        })
        .collect();
    for (i, s) in pattern.iter().enumerate() {
        if s.duration <= 0.0 {
            return Err(Error::Domain(format!(
                "letter {i} has zero duration; no periodic signal realizes it"
            )));
        }
    }
    let sig = SwitchingSignal::periodic(&pattern, 1, pattern[0].mode);
    sig.validate(sys)?;
    let period = sig.total_duration();
    let p = flow(sys, &sig, period)?;
    let (x0, c, rho) = dominant_direction(&p)?;
    Ok(EuWitness {
        tail_mode: pattern[0].mode,
        pattern,
        period,
        x0,
        rho,
        c,
    })
}

/// Witness for holding a single mode forever, with a unit sampling period.
pub fn constant_witness(sys: &ImpulsiveSystem, mode: usize) -> Result<EuWitness> {
    let m = sys
        .modes()
        .get(mode)
        .ok_or_else(|| Error::Invalid(format!("mode {mode} out of range")))?;
    let (x0, c, rho) = dominant_direction(&mat_exp(&m.flow, 1.0)?)?;
    Ok(EuWitness {
        pattern: Vec::new(),
        tail_mode: mode,
        period: 1.0,
        x0,
        rho,
        c,
    })
}

/// Empirical rate `log(|x(nT)|/|x₀|) / (nT)` after `periods` periods.
pub fn growth_rate(sys: &ImpulsiveSystem, w: &EuWitness, periods: usize) -> Result<f64> {
    if periods == 0 {
        return Err(Error::Domain("growth rate needs at least one period".into()));
    }
    let t = w.end_time(periods);
    let x = flow(sys, &w.signal(periods), t)? * &w.x0;
    Ok((x.norm() / w.x0.norm()).ln() / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Letter, Mode};

    fn letter(source: usize, t: f64, sys: &ImpulsiveSystem) -> Letter {
        let m = &sys.modes()[source];
        Letter {
            source,
            weight: t,
            cell: 0.0,
            matrix: &m.jump * mat_exp(&m.flow, t).unwrap(),
        }
    }

    #[test]
    fn scalar_growth() {
        let sys = ImpulsiveSystem::new(
            1.0,
            vec![Mode::new(
                Matrix::from_element(1, 1, -1.0),
                Matrix::from_element(1, 1, 3.0),
            )],
        )
        .unwrap();
        let word = Word::from_letters(1, [letter(0, 1.0, &sys)]).unwrap();
        let w = eu_witness(&sys, &word).unwrap();
        assert_eq!(w.c, 1.0);
        assert!((w.rate() - (3f64.ln() - 1.0)).abs() < 1e-12);
        let g = growth_rate(&sys, &w, 50).unwrap();
        assert!((g - w.rate()).abs() < 1e-9);
    }

    #[test]
    fn rotation_growth() {
        // spiral with growth rate 0.1; the jump is the identity
        let z1 = Matrix::from_row_slice(2, 2, &[0.1, -1.0, 1.0, 0.1]);
        let sys = ImpulsiveSystem::new(0.5, vec![Mode::new(z1, Matrix::identity(2, 2))]).unwrap();
        let word = Word::from_letters(2, [letter(0, 1.0, &sys)]).unwrap();
        let w = eu_witness(&sys, &word).unwrap();
        assert!(w.c > 0.0 && w.c <= 1.0, "{w:?}");
        assert!((w.rate() - 0.1).abs() < 1e-9);
        for n in [1, 5, 20] {
            let x = flow(&sys, &w.signal(n), w.end_time(n)).unwrap() * &w.x0;
            assert!(x.norm() >= w.c * w.rho.powi(n as i32) * w.x0.norm() * (1.0 - 1e-9));
        }
    }

    #[test]
    fn constant_mode() {
        let sys = ImpulsiveSystem::new(
            0.0,
            vec![Mode::new(
                Matrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, -1.0]),
                Matrix::identity(2, 2),
            )],
        )
        .unwrap();
        let w = constant_witness(&sys, 0).unwrap();
        assert!((w.rate() - 0.2).abs() < 1e-12);
        assert!((growth_rate(&sys, &w, 10).unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn zero_duration_rejected() {
        let sys = ImpulsiveSystem::new(
            0.0,
            vec![Mode::new(
                Matrix::from_element(1, 1, 0.0),
                Matrix::from_element(1, 1, 2.0),
            )],
        )
        .unwrap();
        let word = Word::from_letters(1, [letter(0, 0.0, &sys)]).unwrap();
        assert!(matches!(eu_witness(&sys, &word), Err(Error::Domain(_))));
    }
}
