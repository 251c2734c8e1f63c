use super::ImpulsiveSystem;
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub mode: usize,
    pub duration: f64,
}

/// Piecewise-constant switching signal: finitely many timed segments, each
/// followed by the jump of its mode, then a tail mode held forever.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    pub segments: Vec<Segment>,
    pub tail_mode: usize,
}

impl SwitchingSignal {
    pub fn constant(mode: usize) -> Self {
        Self {
            segments: Vec::new(),
            tail_mode: mode,
        }
    }

    /// Dwell-time and index checks against `sys`.
    pub fn validate(&self, sys: &ImpulsiveSystem) -> Result<()> {
        let n = sys.modes().len();
        for (i, s) in self.segments.iter().enumerate() {
            if s.mode >= n {
                return Err(Error::Invalid(format!(
                    "segment {i}: mode {} out of range (system has {n} modes)",
                    s.mode
                )));
            }
            if !s.duration.is_finite() || s.duration < sys.tau() || s.duration <= 0.0 {
                return Err(Error::Invalid(format!(
                    "segment {i}: duration {} violates dwell time {} (must be >= tau and > 0)",
                    s.duration,
                    sys.tau()
                )));
            }
        }
        if self.tail_mode >= n {
            return Err(Error::Invalid(format!(
                "tail_mode {} out of range (system has {n} modes)",
                self.tail_mode
            )));
        }
        Ok(())
    }

    /// Cumulative switching instants `t₁ < t₂ < …`.
    pub fn switching_times(&self) -> Vec<f64> {
        self.segments
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s.duration;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `self` up to its last switch, then `other`.
    pub fn concat(&self, other: &SwitchingSignal) -> SwitchingSignal {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        SwitchingSignal {
            segments,
            tail_mode: other.tail_mode,
        }
    }

    /// `pattern` repeated `periods` times, then `tail_mode`.
    pub fn periodic(pattern: &[Segment], periods: usize, tail_mode: usize) -> Self {
        let mut segments = Vec::with_capacity(pattern.len() * periods);
        for _ in 0..periods {
            segments.extend_from_slice(pattern);
        }
        Self { segments, tail_mode }
    }
}

/// Transition matrix `Φ_Z(t, 0)`.
///
/// The state is right-continuous: at a switching instant the jump of the
/// segment that just ended has already been applied.
pub fn flow(sys: &ImpulsiveSystem, sig: &SwitchingSignal, t: f64) -> Result<Matrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("flow needs finite t >= 0, got {t}")));
    }
    sig.validate(sys)?;
    let d = sys.dim();
    let modes = sys.modes();
    let mut phi = Matrix::identity(d, d);
    let mut start = 0.0;
    for s in &sig.segments {
        let end = start + s.duration;
        let mode = &modes[s.mode];
        if t < end {
            return Ok(mat_exp(&mode.flow, t - start)? * phi);
        }
        phi = &mode.jump * mat_exp(&mode.flow, s.duration)? * phi;
        start = end;
    }
    Ok(mat_exp(&modes[sig.tail_mode].flow, t - start)? * phi)
}
