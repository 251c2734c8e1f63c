use super::ImpulsiveSystem;
use crate::error::{Error, Result};
use crate::linalg::{check_matrix, mat_exp, Matrix};

/// Where an instantiated atom came from: the index of its source atom in the
/// system it was instantiated from, and the width of the parameter cell it
/// stands for (`0` for exact atoms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Origin {
    pub source: usize,
    pub cell: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// A single matrix with its time weight.
    Explicit {
        matrix: Matrix,
        weight: f64,
        origin: Option<Origin>,
    },
    /// `{(Z₂ e^{tZ₁}, t) : t ∈ [t_lo, t_hi]}`; `t_hi` may be `+∞`.
    FlowFamily {
        flow: Matrix,
        jump: Matrix,
        t_lo: f64,
        t_hi: f64,
    },
}

impl Atom {
    pub fn explicit(matrix: Matrix, weight: f64) -> Self {
        Atom::Explicit {
            matrix,
            weight,
            origin: None,
        }
    }

    pub fn family(flow: Matrix, jump: Matrix, t_lo: f64, t_hi: f64) -> Self {
        Atom::FlowFamily { flow, jump, t_lo, t_hi }
    }

    /// `(Z₂ e^{tZ₁}, t)` for a family, the atom itself when explicit.
    pub fn instance(&self, t: f64) -> Result<(Matrix, f64)> {
        match self {
            Atom::Explicit { matrix, weight, .. } => Ok((matrix.clone(), *weight)),
            Atom::FlowFamily { flow, jump, t_lo, t_hi } => {
                if t < *t_lo || t > *t_hi {
                    return Err(Error::Domain(format!("t = {t} outside family range [{t_lo}, {t_hi}]")));
                }
                Ok((jump * mat_exp(flow, t)?, t))
            }
        }
    }
}

/// The part of a flow family beyond the instantiated grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTail {
    pub source: usize,
    pub flow: Matrix,
    pub jump: Matrix,
    /// The tail covers `t > from` (up to the family's `t_hi`).
    pub from: f64,
    pub to: f64,
}

/// An instantiated atom as used by the word searches.
#[derive(Debug, Clone, PartialEq)]
pub struct Letter {
    pub source: usize,
    pub weight: f64,
    pub cell: f64,
    pub matrix: Matrix,
}

/// Discrete-time system whose steps carry time weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSystem {
    dim: usize,
    atoms: Vec<Atom>,
    tails: Vec<FamilyTail>,
}

impl WeightedSystem {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("weighted system needs at least one atom".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            match a {
                Atom::Explicit { matrix, weight, .. } => {
                    check_matrix(matrix, dim, &format!("atom {i}"))?;
                    if !(weight.is_finite() && *weight >= 0.0) {
                        return Err(Error::Invalid(format!("atom {i}: weight {weight} must be >= 0")));
                    }
                }
                Atom::FlowFamily { flow, jump, t_lo, t_hi } => {
                    check_matrix(flow, dim, &format!("atom {i}: Z1"))?;
                    check_matrix(jump, dim, &format!("atom {i}: Z2"))?;
                    if !(t_lo.is_finite() && *t_lo >= 0.0 && t_lo <= t_hi) {
                        return Err(Error::Invalid(format!(
                            "atom {i}: bad parameter range [{t_lo}, {t_hi}]"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            dim,
            atoms,
            tails: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn tails(&self) -> &[FamilyTail] {
        &self.tails
    }

    pub fn has_families(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, Atom::FlowFamily { .. }))
    }

    /// Letters of an instantiated system, in atom order.
    pub fn letters(&self) -> Result<Vec<Letter>> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                Atom::Explicit { matrix, weight, origin } => {
                    let o = origin.unwrap_or(Origin { source: i, cell: 0.0 });
                    Ok(Letter {
                        source: o.source,
                        weight: *weight,
                        cell: o.cell,
                        matrix: matrix.clone(),
                    })
                }
                Atom::FlowFamily { .. } => Err(Error::Domain(format!(
                    "atom {i} is a flow family; instantiate the system first"
                ))),
            })
            .collect()
    }
}

/// One flow family `(Z₂ e^{tZ₁}, t), t ≥ τ` per mode.
pub fn lift(sys: &ImpulsiveSystem) -> WeightedSystem {
    let atoms = sys
        .modes()
        .iter()
        .map(|m| Atom::family(m.flow.clone(), m.jump.clone(), sys.tau(), f64::INFINITY))
        .collect();
    WeightedSystem::new(sys.dim(), atoms).expect("modes were validated on construction")
}

/// Replaces every flow family by explicit atoms on the grid
/// `t_lo, t_lo + step, …` up to `min(t_hi, t_max)`; families reaching past
/// `t_max` leave a [`FamilyTail`].
///
/// The atom at grid point `g` stands for the cell `(g', g]` reaching back to
/// the previous grid point `g'`; the first point is exact.
pub fn instantiate(ws: &WeightedSystem, grid_step: f64, t_max: f64) -> Result<WeightedSystem> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::Domain(format!("grid step must be > 0, got {grid_step}")));
    }
    let mut atoms = Vec::new();
    let mut tails = ws.tails.clone();
    for (i, a) in ws.atoms.iter().enumerate() {
        match a {
            Atom::Explicit { matrix, weight, origin } => atoms.push(Atom::Explicit {
                matrix: matrix.clone(),
                weight: *weight,
                origin: Some(origin.unwrap_or(Origin { source: i, cell: 0.0 })),
            }),
            Atom::FlowFamily { flow, jump, t_lo, t_hi } => {
                if t_max < *t_lo {
                    return Err(Error::Domain(format!(
                        "atom {i}: t_max = {t_max} is below t_lo = {t_lo}"
                    )));
                }
                let upper = t_hi.min(t_max);
                let slack = 1e-9 * grid_step;
                let mut j = 0usize;
                let mut prev = *t_lo;
                loop {
                    let t = t_lo + j as f64 * grid_step;
                    if t > upper + slack || (j > 0 && prev >= upper) {
                        break;
                    }
                    let t = t.min(upper);
                    atoms.push(Atom::Explicit {
                        matrix: jump * mat_exp(flow, t)?,
                        weight: t,
                        origin: Some(Origin {
                            source: i,
                            cell: t - prev,
                        }),
                    });
                    prev = t;
                    j += 1;
                }
                if *t_hi > t_max {
                    tails.push(FamilyTail {
                        source: i,
                        flow: flow.clone(),
                        jump: jump.clone(),
                        from: t_max,
                        to: *t_hi,
                    });
                }
            }
        }
    }
    Ok(WeightedSystem {
        dim: ws.dim,
        atoms,
        tails,
    })
}

/// The system with every step rescaled by `e^{ξ·weight}`.
pub fn shift(ws: &WeightedSystem, xi: f64) -> WeightedSystem {
    let id = Matrix::identity(ws.dim, ws.dim);
    let atoms = ws
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Explicit { matrix, weight, origin } => Atom::Explicit {
                matrix: matrix * (xi * weight).exp(),
                weight: *weight,
                origin: *origin,
            },
            Atom::FlowFamily { flow, jump, t_lo, t_hi } => Atom::FlowFamily {
                flow: flow + &id * xi,
                jump: jump.clone(),
                t_lo: *t_lo,
                t_hi: *t_hi,
            },
        })
        .collect();
    let tails = ws
        .tails
        .iter()
        .map(|t| FamilyTail {
            flow: &t.flow + &id * xi,
            ..t.clone()
        })
        .collect();
    WeightedSystem {
        dim: ws.dim,
        atoms,
        tails,
    }
}
