//! JSON files for systems and switching signals.

use serde::{Deserialize, Serialize};

use super::{Atom, ImpulsiveSystem, Mode, Segment, SwitchingSignal, WeightedSystem};
use crate::error::{Error, Result};
use crate::linalg::{to_rows, Matrix};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    #[serde(rename = "Z1")]
    z1: Vec<Vec<f64>>,
    #[serde(rename = "Z2")]
    z2: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    dim: usize,
    tau: f64,
    modes: Vec<ModeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    mode: usize,
    duration: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalFile {
    segments: Vec<SegmentFile>,
    tail_mode: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedFile {
    dim: usize,
    atoms: Vec<AtomFile>,
}

fn matrix_field(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Matrix> {
    if rows.len() != dim {
        return Err(Error::Invalid(format!(
            "{what}: has {} rows, expected {dim}",
            rows.len()
        )));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Invalid(format!(
                "{what}: row {r} has {} entries, expected {dim}",
                row.len()
            )));
        }
    }
    Ok(Matrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

pub fn parse_system(text: &str) -> Result<ImpulsiveSystem> {
    let file: SystemFile = serde_json::from_str(text)?;
    if file.dim == 0 {
        return Err(Error::Invalid("dim: must be positive".into()));
    }
    if file.modes.is_empty() {
        return Err(Error::Invalid("modes: list is empty".into()));
    }
    let modes = file
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            Ok(Mode::new(
                matrix_field(&m.z1, file.dim, &format!("modes[{i}].Z1"))?,
                matrix_field(&m.z2, file.dim, &format!("modes[{i}].Z2"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    ImpulsiveSystem::new(file.tau, modes)
}

/// Parses an explicit weighted system `{"dim": d, "atoms": [{"A": …, "weight": w}]}`.
pub fn parse_weighted(text: &str) -> Result<WeightedSystem> {
    let file: WeightedFile = serde_json::from_str(text)?;
    if file.dim == 0 {
        return Err(Error::Invalid("dim: must be positive".into()));
    }
    let atoms = file
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            Ok(Atom::explicit(
                matrix_field(&a.a, file.dim, &format!("atoms[{i}].A"))?,
                a.weight,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedSystem::new(file.dim, atoms)
}

pub fn system_to_json(sys: &ImpulsiveSystem) -> String {
    let file = SystemFile {
        dim: sys.dim(),
        tau: sys.tau(),
        modes: sys
            .modes()
            .iter()
            .map(|m| ModeFile {
                z1: to_rows(&m.flow),
                z2: to_rows(&m.jump),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

/// Parses a signal and checks it against `sys` (indices and dwell time).
pub fn parse_signal(text: &str, sys: &ImpulsiveSystem) -> Result<SwitchingSignal> {
    let file: SignalFile = serde_json::from_str(text)?;
    let sig = SwitchingSignal {
        segments: file
            .segments
            .iter()
            .map(|s| Segment {
                mode: s.mode,
                duration: s.duration,
            })
            .collect(),
        tail_mode: file.tail_mode,
    };
    sig.validate(sys)?;
    Ok(sig)
}

pub fn signal_to_json(sig: &SwitchingSignal) -> String {
    let file = SignalFile {
        segments: sig
            .segments
            .iter()
            .map(|s| SegmentFile {
                mode: s.mode,
                duration: s.duration,
            })
            .collect(),
        tail_mode: sig.tail_mode,
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}
