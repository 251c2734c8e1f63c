//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL`
//! line; the test fails if any criterion does.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use issa_cli::{exit, run, Outcome};
use issa_core::exponent::{berger_wang_check, explore, SearchConfig};
use issa_core::linalg::{eigenvalues, exp_norm_bound, mat_exp, operator_norm, span_residual, Matrix};
use issa_core::model::{
    flow, io, shift, Atom, ImpulsiveSystem, Letter, Mode, Segment, SwitchingSignal, WeightedSystem, Word,
};
use issa_core::structure::{invariant_flag, is_irreducible, Irreducibility};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn issa(args: &[&str]) -> Outcome {
    run(std::iter::once("issa").chain(args.iter().copied()))
}

fn timed(args: &[&str]) -> (Outcome, Duration) {
    let start = Instant::now();
    let out = issa(args);
    (out, start.elapsed())
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}{}", out.stdout, out.stderr))
}

fn real(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        Value::String(s) if s == "-inf" => f64::NEG_INFINITY,
        other => other.as_f64().expect("number"),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn matrix(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Matrix {
    Matrix::from_fn(d, d, |_, _| scale * (2.0 * r.gen::<f64>() - 1.0))
}

fn explicit_system(r: &mut ChaCha8Rng, d: usize, atoms: usize) -> WeightedSystem {
    let atoms = (0..atoms)
        .map(|_| {
            let w = r.gen_range(0.2..2.0);
            Atom::explicit(matrix(r, d, 1.0), w)
        })
        .collect();
    WeightedSystem::new(d, atoms).unwrap()
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn counterexample() -> Check {
    let file = data("counterexample.json");
    let file = file.to_str().unwrap();
    let (a, ta) = timed(&["analyze", file]);
    ensure(a.code == exit::INFINITE, format!("analyze exit {}", a.code))?;
    let r = json(&a);
    ensure(r["class"] == "INFINITE", format!("class {}", r["class"]))?;
    ensure(real(&r["alpha_max"]) == 0.0, format!("alpha_max {}", r["alpha_max"]))?;
    let mu = real(&r["mu_lo"]);
    ensure(mu.abs() <= 1e-9, format!("mu_lo {mu}"))?;
    let (s, ts) = timed(&["structure", file]);
    ensure(s.code == exit::OK, format!("structure exit {}", s.code))?;
    let jp = &json(&s)["jump_products"];
    ensure(jp["verdict"] == "unbounded", format!("verdict {}", jp["verdict"]))?;
    let word: Vec<u64> = jp["word"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    ensure(
        !word.is_empty() && word.iter().all(|&i| i == 0),
        format!("word {word:?}"),
    )?;
    let total = ta + ts;
    ensure(total < Duration::from_secs(5), format!("took {total:?}"))?;
    Ok(format!("INFINITE, alpha 0, mu {mu:e}, word {word:?}, {total:.2?}"))
}

fn scalar_es() -> Check {
    let (a, t) = timed(&["analyze", data("scalar_es.json").to_str().unwrap()]);
    ensure(a.code == exit::ES, format!("exit {}", a.code))?;
    let r = json(&a);
    let (lo, hi) = (real(&r["lambda_lo"]), real(&r["lambda_hi"]));
    ensure(lo <= -1.0 && -1.0 <= hi && hi - lo <= 0.1, format!("[{lo}, {hi}]"))?;
    ensure(r["class"] == "ES", format!("class {}", r["class"]))?;
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!("[{lo:.6}, {hi:.6}], {t:.2?}"))
}

fn scalar_eu() -> Check {
    let exact = 3f64.ln() - 1.0;
    let sys = data("scalar_eu.json");
    let sys = sys.to_str().unwrap();
    let a = issa(&["analyze", sys]);
    ensure(a.code == exit::EU, format!("exit {}", a.code))?;
    let r = json(&a);
    let (lo, hi) = (real(&r["lambda_lo"]), real(&r["lambda_hi"]));
    ensure(lo <= exact && exact <= hi && hi - lo <= 0.05, format!("[{lo}, {hi}]"))?;

    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("signal.json");
    let x0 = dir.path().join("x0.json");
    let w = issa(&[
        "witness",
        sys,
        "--periods",
        "20",
        "--signal-out",
        sig.to_str().unwrap(),
        "--x0-out",
        x0.to_str().unwrap(),
    ]);
    ensure(w.code == exit::OK, format!("witness exit {}: {}", w.code, w.stderr))?;
    let period = json(&w)["period"].as_f64().unwrap();
    ensure((period - 1.0).abs() < 1e-12, format!("period {period}"))?;
    // simulate the emitted signal independently of the witness code
    let x0v: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&x0).unwrap()).unwrap();
    let x0s = x0v.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
    let s = issa(&[
        "simulate",
        sys,
        sig.to_str().unwrap(),
        "--dt",
        "0.5",
        "--T",
        "20",
        "--x0",
        &x0s,
    ]);
    ensure(s.code == exit::OK, format!("simulate exit {}: {}", s.code, s.stderr))?;
    let last: Vec<f64> = s
        .stdout
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    ensure(last[0] == 20.0, format!("last row at t = {}", last[0]))?;
    let norm0 = x0v.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rate = (last.last().unwrap() / norm0).ln() / 20.0;
    ensure((rate - exact).abs() <= 0.01, format!("simulated rate {rate}"))?;
    Ok(format!("[{lo:.6}, {hi:.6}], simulated 20-period rate {rate:.6}"))
}

fn shift_equivariance() -> Check {
    let mut r = rng(4);
    let cfg = SearchConfig {
        max_depth: 5,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = r.gen_range(1..=4);
        let atoms = r.gen_range(1..=3);
        let ws = explicit_system(&mut r, d, atoms);
        let xi = r.gen_range(-2.0..=2.0);
        let (_, a) = explore(&ws, &cfg).unwrap();
        let (_, b) = explore(&shift(&ws, xi), &cfg).unwrap();
        ensure(
            a.best_word == b.best_word,
            format!("system {i}: words {:?} vs {:?}", a.best_word, b.best_word),
        )?;
        let mut diffs = vec![b.mu - (a.mu + xi), b.norm_growth() - (a.norm_growth() + xi)];
        diffs.extend(a.norm_by_depth.iter().zip(&b.norm_by_depth).map(|(x, y)| y - (x + xi)));
        diffs.extend(
            a.mu_by_depth
                .iter()
                .zip(&b.mu_by_depth)
                .filter(|(x, _)| x.is_finite())
                .map(|(x, y)| y - (x + xi)),
        );
        for e in diffs {
            worst = worst.max(e.abs());
        }
        ensure(worst <= 1e-9, format!("system {i}: shift error {worst:e}"))?;
    }
    Ok(format!("50 systems, max error {worst:e}"))
}

fn berger_wang() -> Check {
    let mut r = rng(5);
    let cfg = SearchConfig {
        max_depth: 12,
        node_budget: 1_000_000,
        ..Default::default()
    };
    let (mut systems, mut monotone) = (0, 0);
    let mut worst: f64 = 0.0;
    while systems < 25 {
        let d = r.gen_range(1..=3);
        let atoms = r.gen_range(1..=3);
        let ws = explicit_system(&mut r, d, atoms);
        let mats: Vec<Matrix> = ws.letters().unwrap().into_iter().map(|l| l.matrix).collect();
        if !matches!(is_irreducible(&mats, 0).unwrap(), Irreducibility::Irreducible) {
            continue;
        }
        systems += 1;
        let rep = berger_wang_check(&ws, &cfg).unwrap();
        ensure(rep.exhaustive, format!("system {systems}: search not exhaustive"))?;
        ensure(
            (-1e-9..=0.15).contains(&rep.gap),
            format!("system {systems}: gap {}", rep.gap),
        )?;
        worst = worst.max(rep.gap);
        // entry k holds depth k + 1
        if rep.gap_by_depth[7..12].windows(2).all(|w| w[1] <= w[0] + 1e-12) {
            monotone += 1;
        }
    }
    ensure(
        monotone * 10 >= systems * 9,
        format!("gap non-increasing in only {monotone}/{systems}"),
    )?;
    Ok(format!(
        "largest gap {worst:.4}, non-increasing in {monotone}/{systems}"
    ))
}

fn converse_lyapunov() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(6);
    let mut certified = 0;
    let mut checks = 0;
    for i in 0..12 {
        let d = r.gen_range(1..=3);
        let tau = r.gen_range(0.2..1.0);
        let modes = (0..r.gen_range(1..=2))
            .map(|_| {
                Mode::new(
                    matrix(&mut r, d, 1.0) - Matrix::identity(d, d) * 2.5,
                    matrix(&mut r, d, 0.6),
                )
            })
            .collect();
        let sys = ImpulsiveSystem::new(tau, modes).unwrap();
        let path = dir.path().join(format!("sys{i}.json"));
        std::fs::write(&path, io::system_to_json(&sys)).unwrap();
        let path = path.to_str().unwrap();
        let a = json(&issa(&["analyze", path]));
        let hi = real(&a["lambda_hi"]);
        if a["class"] != "ES" {
            continue;
        }
        let gamma = format!("{:e}", -hi / 2.0);
        let c = issa(&["certify", path, "--gamma", &gamma, "--samples", "1000"]);
        let rep = json(&c);
        if c.code == exit::DECAY_FAILED && rep.get("validation").is_none() {
            continue; // the closure did not terminate; nothing was certified
        }
        ensure(
            c.code == exit::OK,
            format!("system {i}: exit {}, {}", c.code, rep["validation"]),
        )?;
        let v = &rep["validation"];
        ensure(
            v["violations"].as_array().unwrap().is_empty(),
            format!("system {i}: violations"),
        )?;
        checks += v["checks"].as_u64().unwrap();
        certified += 1;
    }
    ensure(certified >= 5, format!("only {certified} systems certified"))?;

    let c = issa(&[
        "certify",
        data("scalar_es.json").to_str().unwrap(),
        "--gamma",
        "0.5",
        "--samples",
        "1000",
    ]);
    ensure(c.code == exit::OK, format!("scalar exit {}", c.code))?;
    let rep = json(&c);
    let cert = &rep["certificate"];
    ensure(cert["c"].as_f64() == Some(1.0), format!("scalar c {}", cert["c"]))?;
    let products = cert["products"].as_array().unwrap();
    // no stored product: V is the Euclidean norm itself
    ensure(products.is_empty(), format!("scalar products {products:?}"))?;
    ensure(
        rep["validation"]["violations"].as_array().unwrap().is_empty(),
        "scalar violations",
    )?;
    Ok(format!(
        "{certified} systems certified, {checks} sphere checks, scalar V = |x| with c = 1"
    ))
}

fn exp_norm() -> Check {
    let mut r = rng(7);
    let mut tightest = f64::INFINITY;
    for i in 0..1000 {
        let d = r.gen_range(1..=5);
        let scale = r.gen_range(0.1..3.0);
        let m = matrix(&mut r, d, scale);
        let t = r.gen_range(0.0..5.0);
        let exact = operator_norm(&mat_exp(&m, t).unwrap()).unwrap();
        let bound = exp_norm_bound(&m, t).unwrap();
        ensure(
            bound >= exact * (1.0 - 1e-9),
            format!("case {i}: bound {bound} < norm {exact}"),
        )?;
        tightest = tightest.min(bound / exact);
    }
    Ok(format!("1000 cases, smallest bound/norm {tightest:.6}"))
}

fn flow_words() -> Check {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = r.gen_range(1..=3);
        let n = r.gen_range(1..=3);
        let tau = r.gen_range(0.0..1.0);
        let modes = (0..n)
            .map(|_| Mode::new(matrix(&mut r, d, 1.0), matrix(&mut r, d, 1.0)))
            .collect();
        let sys = ImpulsiveSystem::new(tau, modes).unwrap();
        let segments: Vec<Segment> = (0..r.gen_range(1..=6))
            .map(|_| Segment {
                mode: r.gen_range(0..n),
                duration: tau + r.gen_range(0.01..2.0),
            })
            .collect();
        let sig = SwitchingSignal {
            segments: segments.clone(),
            tail_mode: 0,
        };
        let letters: Vec<Letter> = segments
            .iter()
            .map(|s| {
                let m = &sys.modes()[s.mode];
                Letter {
                    source: s.mode,
                    weight: s.duration,
                    cell: 0.0,
                    matrix: &m.jump * mat_exp(&m.flow, s.duration).unwrap(),
                }
            })
            .collect();
        for (k, t) in sig.switching_times().into_iter().enumerate() {
            let word = Word::from_letters(d, letters[..=k].iter().cloned()).unwrap();
            let phi = flow(&sys, &sig, t).unwrap();
            let err = (&phi - word.product()).norm() / phi.norm().max(word.product().norm()).max(1e-300);
            worst = worst.max(err);
            ensure(err <= 1e-9, format!("system {i}, switch {k}: relative error {err:e}"))?;
        }
    }
    Ok(format!("100 systems, max relative error {worst:e}"))
}

fn flags() -> Check {
    let plans: [&[usize]; 4] = [&[1, 1], &[1, 2], &[2, 1], &[1, 2, 1]];
    let mut r = rng(9);
    for f_i in 0..25 {
        let dims = plans[f_i % plans.len()];
        let n: usize = dims.iter().sum();
        let s = Matrix::identity(n, n) + matrix(&mut r, n, 0.3);
        let s_inv = s.clone().try_inverse().unwrap();
        let mats: Vec<Matrix> = (0..r.gen_range(2..=3))
            .map(|_| {
                let mut a = matrix(&mut r, n, 1.0);
                let mut start = 0;
                for &k in dims {
                    for i in start + k..n {
                        for j in start..start + k {
                            a[(i, j)] = 0.0;
                        }
                    }
                    start += k;
                }
                &s * a * &s_inv
            })
            .collect();
        let f = invariant_flag(&mats, 0).unwrap();
        for a in &mats {
            let res = f.lower_residual(a);
            ensure(res <= 1e-9, format!("family {f_i}: residual {res:e}"))?;
        }
        // each planted subspace must be one of the recovered ones
        let q = f.p.transpose();
        let mut cum = 0;
        for &k in &dims[..dims.len() - 1] {
            cum += k;
            let mut acc = 0;
            let mut found = false;
            for &b in &f.block_dims {
                acc += b;
                if acc == cum {
                    let basis = q.columns(0, cum).into_owned();
                    found = (0..cum).all(|j| {
                        let v = s.column(j).into_owned();
                        span_residual(&basis, &v) <= 1e-6 * v.norm()
                    });
                }
            }
            ensure(
                found,
                format!("family {f_i}: planted dim {cum} not in {:?}", f.block_dims),
            )?;
        }
        for (m, a) in mats.iter().enumerate() {
            let mut whole = eigenvalues(a).unwrap().eigenvalues;
            for b in &f.blocks[m] {
                for z in eigenvalues(b).unwrap().eigenvalues {
                    let (i, dist) = whole
                        .iter()
                        .enumerate()
                        .map(|(i, w)| (i, (w - z).norm()))
                        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                    ensure(dist <= 1e-7, format!("family {f_i}: eigenvalue {z} off by {dist:e}"))?;
                    whole.remove(i);
                }
            }
            ensure(whole.is_empty(), format!("family {f_i}: spectrum not covered"))?;
        }
    }
    Ok("25 planted families refined, spectra preserved".into())
}

fn continuity() -> Check {
    let sys = data("scalar_es_dwell.json");
    let sys = sys.to_str().unwrap();
    let base = json(&issa(&["analyze", sys]));
    let (lo0, hi0) = (real(&base["lambda_lo"]), real(&base["lambda_hi"]));
    let out = issa(&["perturb", sys, "--eps", "1e-3,1e-2,1e-1", "--trials", "10"]);
    ensure(
        out.code == exit::OK,
        format!("perturb exit {}: {}", out.code, out.stderr),
    )?;
    let mut worst = [0.0f64; 3];
    for line in out.stdout.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let eps: f64 = f[0].parse().unwrap();
        let (lo, hi): (f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap());
        let drift = (lo - lo0).abs().max((hi - hi0).abs());
        ensure(drift <= 5.0 * eps, format!("eps {eps}: drift {drift}"))?;
        ensure(eps > 1e-2 || f[5] == "ES", format!("eps {eps}: class {}", f[5]))?;
        let slot = [1e-3, 1e-2, 1e-1].iter().position(|e| (e - eps).abs() < 1e-15).unwrap();
        worst[slot] = worst[slot].max(drift);
    }
    Ok(format!(
        "max drift {:.2e} / {:.2e} / {:.2e}",
        worst[0], worst[1], worst[2]
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        "counterexample.json",
        "scalar_es.json",
        "scalar_eu.json",
        "two_modes.json",
    ];
    let mut reports = 0;
    for f in files {
        let p = data(f);
        let p = p.to_str().unwrap();
        let suite: Vec<Vec<&str>> = vec![
            vec!["analyze", p],
            vec!["structure", p],
            vec!["bw-check", p],
            vec!["witness", p],
            vec!["certify", p, "--gamma", "0.1"],
            vec!["perturb", p, "--eps", "1e-3,1e-2", "--trials", "3"],
        ];
        for args in suite {
            let runs: Vec<Outcome> = ["1", "4"]
                .iter()
                .map(|w| {
                    let mut a = args.clone();
                    a.extend(["--seed", "7", "--workers", w]);
                    issa(&a)
                })
                .collect();
            ensure(runs[0] == runs[1], format!("{args:?} differs between runs"))?;
            reports += 1;
        }
    }
    let sim: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("traj{i}.csv"));
            let o = issa(&[
                "simulate",
                data("two_modes.json").to_str().unwrap(),
                data("signal_one_jump.json").to_str().unwrap(),
                "--dt",
                "0.1",
                "--T",
                "3",
                "--x0",
                "1,-1",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(o.code, exit::OK, "{}", o.stderr);
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    ensure(sim[0] == sim[1], "simulate differs between runs")?;
    Ok(format!(
        "{} reports byte-identical across runs and worker counts",
        reports + 1
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("counterexample is INFINITE", counterexample),
        ("scalar ES bracket", scalar_es),
        ("scalar EU bracket and witness", scalar_eu),
        ("shift equivariance", shift_equivariance),
        ("Berger-Wang gap", berger_wang),
        ("converse Lyapunov certificates", converse_lyapunov),
        ("exponential norm bound", exp_norm),
        ("flow/word correspondence", flow_words),
        ("flag decomposition", flags),
        ("continuity under perturbation", continuity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
