use issa_core::linalg::{mat_exp, Vector};
use issa_core::model::{flow, ImpulsiveSystem, SwitchingSignal};
use issa_core::{Error, Result};

/// Full double precision, 17 significant digits.
pub(crate) fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn row(out: &mut String, t: f64, x: &Vector) {
    out.push_str(&num(t));
    for v in x.iter() {
        out.push(',');
        out.push_str(&num(*v));
    }
    out.push(',');
    out.push_str(&num(x.norm()));
    out.push('\n');
}

/// Samples `x(t) = Φ(t,0)·x₀` on `0, dt, 2dt, …, T`.
///
/// Every switching instant up to `T` contributes two rows with the same
/// time: the left limit, then the value after the jump.
pub(crate) fn trajectory_csv(
    sys: &ImpulsiveSystem,
    sig: &SwitchingSignal,
    x0: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<String> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("--dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Invalid(format!("--T must be positive, got {t_end}")));
    }
    if x0.len() != sys.dim() {
        return Err(Error::Invalid(format!(
            "--x0 has {} entries, system dimension is {}",
            x0.len(),
            sys.dim()
        )));
    }
    let x0 = Vector::from_column_slice(x0);
    let mut out =
        String::from("# rows at a switching instant come in pairs: left limit first, then the state after the jump\n");
    out.push('t');
    for i in 1..=sys.dim() {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",norm\n");

    let switches: Vec<f64> = sig.switching_times().into_iter().filter(|s| *s <= t_end).collect();
    let steps = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    if grid.last().is_some_and(|&t| t_end - t > 1e-9 * dt) {
        grid.push(t_end);
    }
    let mut k = 0;
    let mut previous_switch = 0.0;
    for &t in &grid {
        while k < switches.len() && switches[k] <= t + 1e-9 * dt {
            let s = switches[k];
            let seg = &sig.segments[k];
            let before = mat_exp(&sys.modes()[seg.mode].flow, seg.duration)? * flow(sys, sig, previous_switch)?;
            row(&mut out, s, &(before * &x0));
            row(&mut out, s, &(flow(sys, sig, s)? * &x0));
            previous_switch = s;
            k += 1;
        }
        if switches[..k].iter().any(|&s| (s - t).abs() <= 1e-9 * dt) {
            continue;
        }
        row(&mut out, t, &(flow(sys, sig, t)? * &x0));
    }
    Ok(out)
}
