use issa_core::exponent::{lambda_bounds, SearchConfig};
use issa_core::linalg::Matrix;
use issa_core::model::{hausdorff_distance, ImpulsiveSystem, Mode};
use issa_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::simulate::num;
use crate::{exit, Outcome};

fn jitter(m: &Matrix, eps: f64, rng: &mut ChaCha8Rng) -> Matrix {
    m.map(|v| v + eps * (2.0 * rng.gen::<f64>() - 1.0))
}

/// `sys` with every flow (and, if `jumps`, every jump map) shifted entrywise
/// by independent uniform draws from `[-eps, eps]`.
pub(crate) fn perturbed(sys: &ImpulsiveSystem, eps: f64, jumps: bool, rng: &mut ChaCha8Rng) -> Result<ImpulsiveSystem> {
    let modes = sys
        .modes()
        .iter()
        .map(|m| {
            let flow = jitter(&m.flow, eps, rng);
            let jump = if jumps {
                jitter(&m.jump, eps, rng)
            } else {
                m.jump.clone()
            };
            Mode::new(flow, jump)
        })
        .collect();
    ImpulsiveSystem::new(sys.tau(), modes)
}

/// One CSV row per `(eps, trial)`: Hausdorff distance to `sys` and the
/// bounds of the perturbed system. Trial `j` at the `e`-th size draws from
/// stream `e·trials + j` of the seeded generator, so rows do not depend on
/// the worker count.
pub(crate) fn perturb(
    sys: &ImpulsiveSystem,
    eps: &[f64],
    trials: usize,
    jumps: bool,
    cfg: &SearchConfig,
) -> Result<Outcome> {
    if jumps && sys.tau() == 0.0 {
        return Err(Error::Invalid(
            "jump maps may only be perturbed when tau > 0: with tau = 0 the exponent is not \
             continuous in the jump set, which must stay fixed"
                .into(),
        ));
    }
    if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Invalid(format!("--eps values must be >= 0, got {e}")));
    }
    if trials == 0 {
        return Err(Error::Invalid("--trials must be at least 1".into()));
    }
    let tasks: Vec<(usize, usize)> = (0..eps.len()).flat_map(|e| (0..trials).map(move |j| (e, j))).collect();
    let rows = tasks
        .par_iter()
        .map(|&(e, j)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((e * trials + j) as u64);
            let p = perturbed(sys, eps[e], jumps, &mut rng)?;
            let d = hausdorff_distance(sys, &p)?;
            let r = lambda_bounds(&p, cfg)?;
            Ok(format!(
                "{},{j},{},{},{},{}\n",
                num(eps[e]),
                num(d),
                num(r.lambda_lo),
                num(r.lambda_hi),
                r.class
            ))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut out = String::from("eps,trial,hausdorff,lambda_lo,lambda_hi,class\n");
    out.extend(rows);
    Ok(Outcome::report(exit::OK, out))
}
