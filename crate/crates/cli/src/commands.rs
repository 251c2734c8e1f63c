use std::path::Path;

use issa_core::exponent::{
    berger_wang_check, build_lyapunov, constant_witness, eu_witness, grid_letters, growth_rate, lambda_bounds,
    mu_lower, validate_lyapunov, Classification, EuWitness, LyapunovFailure,
};
use issa_core::linalg::{spectral_abscissa, to_rows, Matrix};
use issa_core::model::{flow, io, lift, ImpulsiveSystem, WeightedSystem};
use issa_core::structure::{
    check_jump_kernel, invariant_flag, is_irreducible, jump_products_bounded, Irreducibility, JumpBound,
};
use issa_core::{Error, Result};
use serde_json::{json, Value};

use crate::{exit, in_file, read_input, Command, Outcome};

pub(crate) fn load_system(path: &Path) -> Result<ImpulsiveSystem> {
    let text = read_input(path)?;
    in_file(path, io::parse_system(&text))
}

pub(crate) fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub(crate) fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Analyze { system, common } => analyze(&load_system(system)?, &common.search_config()?),
        Command::Simulate {
            system,
            signal,
            dt,
            t_end,
            x0,
            ..
        } => {
            let sys = load_system(system)?;
            let text = read_input(signal)?;
            let sig = in_file(signal, io::parse_signal(&text, &sys))?;
            let csv = crate::simulate::trajectory_csv(&sys, &sig, x0, *dt, *t_end)?;
            Ok(Outcome::report(exit::OK, csv))
        }
        Command::Certify {
            system,
            gamma,
            samples,
            common,
        } => certify(&load_system(system)?, *gamma, *samples, &common.search_config()?),
        Command::Witness {
            system,
            periods,
            signal_out,
            x0_out,
            common,
        } => {
            let out = witness(&load_system(system)?, *periods, &common.search_config()?)?;
            if let Some((w, _)) = &out.1 {
                let write = |p: &Path, text: String| {
                    std::fs::write(p, text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))
                };
                if let Some(p) = signal_out {
                    write(p, io::signal_to_json(&w.signal(*periods)))?;
                }
                if let Some(p) = x0_out {
                    write(p, pretty(&json!(w.x0.as_slice())))?;
                }
            }
            Ok(out.0)
        }
        Command::Structure { system, common } => structure(&load_system(system)?, &common.search_config()?),
        Command::Perturb {
            system,
            eps,
            trials,
            jumps,
            common,
        } => crate::perturb::perturb(&load_system(system)?, eps, *trials, *jumps, &common.search_config()?),
        Command::BwCheck { system, common } => {
            let text = read_input(system)?;
            let value: Value = in_file(system, serde_json::from_str(&text).map_err(Error::from))?;
            let ws = if value.get("atoms").is_some() {
                in_file(system, io::parse_weighted(&text))?
            } else {
                lift(&in_file(system, io::parse_system(&text))?)
            };
            bw_check(&ws, &common.search_config()?)
        }
    }
}

pub fn class_code(c: Classification) -> i32 {
    match c {
        Classification::Es => exit::ES,
        Classification::Eu => exit::EU,
        Classification::Undetermined => exit::UNDETERMINED,
        Classification::Infinite => exit::INFINITE,
        Classification::MinusInfinity => exit::MINUS_INFINITY,
    }
}

fn analyze(sys: &ImpulsiveSystem, cfg: &issa_core::exponent::SearchConfig) -> Result<Outcome> {
    let report = lambda_bounds(sys, cfg)?;
    Ok(Outcome::report(class_code(report.class), pretty(&report.to_json())))
}

fn certify(
    sys: &ImpulsiveSystem,
    gamma: f64,
    samples: usize,
    cfg: &issa_core::exponent::SearchConfig,
) -> Result<Outcome> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Invalid(format!("--gamma must be positive, got {gamma}")));
    }
    let alpha = sys.alpha_max()?;
    if alpha >= 0.0 {
        return Ok(Outcome::failure(
            exit::ALPHA_PRECONDITION,
            format!("alpha_max = {alpha} is not negative; no decaying norm can exist"),
        ));
    }
    let ws = lift(sys);
    let cert = match build_lyapunov(&ws, gamma, cfg)? {
        Ok(c) => c,
        Err(f) => {
            let word = match &f {
                LyapunovFailure::NotClosed { word } => word.iter().map(|(m, t)| json!({"mode": m, "t": t})).collect(),
                LyapunovFailure::Budget => Vec::new(),
            };
            let report = json!({"status": "decay_failed", "reason": f.to_string(), "word": word});
            return Ok(Outcome {
                code: exit::DECAY_FAILED,
                stdout: pretty(&report),
                stderr: format!("error: decay at rate {gamma} not established: {f}\n"),
            });
        }
    };
    let letters = grid_letters(&ws, cfg)?;
    let v = validate_lyapunov(&cert, &letters, samples);
    let violations: Vec<Value> = v
        .violations
        .iter()
        .map(|x| json!({"mode": x.source, "t": x.weight, "x": x.x.as_slice(), "lhs": x.lhs, "rhs": x.rhs}))
        .collect();
    let validation = json!({
        "samples": samples,
        "checks": v.checks,
        "worst_ratio": v.worst_ratio,
        "violations": violations,
    });
    if !v.violations.is_empty() {
        let report = json!({"status": "decay_failed", "validation": validation});
        return Ok(Outcome {
            code: exit::DECAY_FAILED,
            stdout: pretty(&report),
            stderr: format!("error: {} sampled decay checks failed\n", v.violations.len()),
        });
    }
    let report = json!({"status": "certified", "certificate": cert.to_json(), "validation": validation});
    Ok(Outcome::report(exit::OK, pretty(&report)))
}

/// Picks the faster-growing of the best searched word and the most unstable
/// flow, and reports the witness with a simulated self-check.
fn witness(
    sys: &ImpulsiveSystem,
    periods: usize,
    cfg: &issa_core::exponent::SearchConfig,
) -> Result<(Outcome, Option<(EuWitness, f64)>)> {
    if periods == 0 {
        return Err(Error::Invalid("--periods must be at least 1".into()));
    }
    let mut best: Option<EuWitness> = None;
    let (mu, word) = mu_lower(&lift(sys), cfg)?;
    if mu > 0.0 {
        if let Some(w) = word {
            if w.letters().iter().all(|l| l.weight > 0.0) {
                best = Some(eu_witness(sys, &w)?);
            }
        }
    }
    for (i, m) in sys.modes().iter().enumerate() {
        let a = spectral_abscissa(&m.flow)?;
        if a > 0.0 && best.as_ref().is_none_or(|b| a > b.rate()) {
            best = Some(constant_witness(sys, i)?);
        }
    }
    let Some(w) = best else {
        return Ok((
            Outcome::failure(exit::NO_WITNESS, "no growing word or unstable mode found"),
            None,
        ));
    };
    let empirical = growth_rate(sys, &w, periods)?;
    let mut worst = f64::INFINITY;
    for n in 1..=periods {
        let x = flow(sys, &w.signal(n), w.end_time(n))? * &w.x0;
        worst = worst.min(x.norm() / (w.c * w.rho.powi(n as i32) * w.x0.norm()));
    }
    let one_period: Value = serde_json::from_str(&io::signal_to_json(&w.signal(1)))?;
    let report = json!({
        "kind": if w.pattern.is_empty() { "constant" } else { "periodic" },
        "period_signal": one_period,
        "x0": w.x0.as_slice(),
        "period": w.period,
        "rho": w.rho,
        "c": w.c,
        "rate": w.rate(),
        "self_check": {
            "periods": periods,
            "empirical_rate": empirical,
            "min_growth_ratio": worst,
        },
    });
    Ok((Outcome::report(exit::OK, pretty(&report)), Some((w, empirical))))
}

fn jump_json(b: &JumpBound) -> Value {
    match b {
        JumpBound::Bounded { c, depth } => json!({"verdict": "bounded", "c": c, "depth": depth}),
        JumpBound::Unbounded { word } => json!({"verdict": "unbounded", "word": word}),
        JumpBound::Unknown => json!({"verdict": "unknown"}),
    }
}

fn structure(sys: &ImpulsiveSystem, cfg: &issa_core::exponent::SearchConfig) -> Result<Outcome> {
    let letters = grid_letters(&lift(sys), cfg)?;
    let mats: Vec<Matrix> = letters.iter().map(|l| l.matrix.clone()).collect();
    let witness = match is_irreducible(&mats, cfg.seed)? {
        Irreducibility::Irreducible => Value::Null,
        Irreducibility::Reducible(u) => json!(to_rows(&u.transpose())),
    };
    let flag = invariant_flag(&mats, cfg.seed)?;
    let residual = mats.iter().map(|a| flag.lower_residual(a)).fold(0.0, f64::max);
    // diagonal blocks of each mode's letter at the shortest dwell time
    let mut blocks = Vec::new();
    for (i, l) in letters.iter().enumerate() {
        if l.cell == 0.0 && letters[..i].iter().all(|k| k.source != l.source) {
            let b: Vec<Value> = flag.blocks[i].iter().map(|m| json!(to_rows(m))).collect();
            blocks.push(json!({"mode": l.source, "t": l.weight, "blocks": b}));
        }
    }
    let jumps: Vec<Matrix> = sys.modes().iter().map(|m| m.jump.clone()).collect();
    let kernel = sys
        .modes()
        .iter()
        .map(|m| check_jump_kernel(&m.flow, &m.jump))
        .collect::<Result<Vec<bool>>>()?;
    let report = json!({
        "irreducible": witness.is_null(),
        "irreducibility_note": "irreducible verdicts come from a randomized candidate search; reducible ones are verified",
        "witness_subspace": witness,
        "flag": {
            "block_dims": flag.block_dims,
            "P": to_rows(&flag.p),
            "max_lower_residual": residual,
            "letters": mats.len(),
            "blocks_at_tau": blocks,
        },
        "jump_products": jump_json(&jump_products_bounded(&jumps, cfg)?),
        "jump_kernel_condition": kernel,
    });
    Ok(Outcome::report(exit::OK, pretty(&report)))
}

fn bw_check(ws: &WeightedSystem, cfg: &issa_core::exponent::SearchConfig) -> Result<Outcome> {
    let r = berger_wang_check(ws, cfg)?;
    let mut report = r.to_json();
    if !r.irreducible {
        report["warning"] = json!("the letters share an invariant subspace; the gap need not vanish");
    }
    Ok(Outcome::report(exit::OK, pretty(&report)))
}
