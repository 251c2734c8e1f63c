mod common;

use issa_core::exponent::{build_lyapunov, explore, grid_letters, validate_lyapunov, SearchConfig};
use issa_core::linalg::{eigenvalues, exp_norm_bound, mat_exp, operator_norm, span_residual, Matrix};
use issa_core::model::{flow, shift, Atom, Letter, Segment, SwitchingSignal, WeightedSystem, Word};
use issa_core::structure::{invariant_flag, jump_products_bounded, JumpBound};
use proptest::prelude::*;
use rand::Rng;

fn explicit_system(seed: u64, d: usize, atoms: usize) -> WeightedSystem {
    let mut r = common::rng(seed);
    let atoms = (0..atoms)
        .map(|_| {
            let w = r.gen_range(0.2..2.0);
            Atom::explicit(common::matrix(&mut r, d, 1.0), w)
        })
        .collect();
    WeightedSystem::new(d, atoms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_norm_bound_dominates(seed in any::<u64>(), d in 1usize..=5, t in 0.0f64..5.0, scale in 0.1f64..3.0) {
        let mut r = common::rng(seed);
        let m = common::matrix(&mut r, d, scale);
        let exact = operator_norm(&mat_exp(&m, t).unwrap()).unwrap();
        let bound = exp_norm_bound(&m, t).unwrap();
        prop_assert!(bound >= exact * (1.0 - 1e-9), "bound {bound} < norm {exact}");
    }

    #[test]
    fn flow_matches_lifted_word(seed in any::<u64>(), d in 1usize..=3, modes in 1usize..=3, tau in 0.0f64..1.0, k in 1usize..=6) {
        let mut r = common::rng(seed);
        let sys = common::system(&mut r, d, modes, tau);
        let segments: Vec<Segment> = (0..k)
            .map(|_| Segment { mode: r.gen_range(0..modes), duration: tau + r.gen_range(0.01..2.0) })
            .collect();
        let sig = SwitchingSignal { segments: segments.clone(), tail_mode: 0 };
        let letters: Vec<Letter> = segments
            .iter()
            .map(|s| {
                let m = &sys.modes()[s.mode];
                Letter { source: s.mode, weight: s.duration, cell: 0.0, matrix: &m.jump * mat_exp(&m.flow, s.duration).unwrap() }
            })
            .collect();
        let times = sig.switching_times();
        for j in 1..=k {
            let word = Word::from_letters(d, letters[..j].iter().cloned()).unwrap();
            let phi = flow(&sys, &sig, times[j - 1]).unwrap();
            prop_assert!(common::close(&phi, word.product(), 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn search_is_shift_equivariant(seed in any::<u64>(), d in 1usize..=4, atoms in 1usize..=3, xi in -2.0f64..2.0) {
        let ws = explicit_system(seed, d, atoms);
        let cfg = SearchConfig { max_depth: 5, ..Default::default() };
        let (_, a) = explore(&ws, &cfg).unwrap();
        let (_, b) = explore(&shift(&ws, xi), &cfg).unwrap();
        prop_assert!((b.mu - (a.mu + xi)).abs() < 1e-9, "{} vs {}", b.mu, a.mu + xi);
        prop_assert_eq!(&a.best_word, &b.best_word);
        for (x, y) in a.norm_by_depth.iter().zip(&b.norm_by_depth) {
            prop_assert!((y - (x + xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn flags_refine_planted_blocks(seed in any::<u64>(), split in 0usize..4, count in 2usize..=3) {
        let plans: [&[usize]; 4] = [&[1, 1], &[1, 2], &[2, 1], &[1, 2, 1]];
        let dims = plans[split];
        let n: usize = dims.iter().sum();
        let mut r = common::rng(seed);
        let s = Matrix::identity(n, n) + common::matrix(&mut r, n, 0.3);
        let s_inv = s.clone().try_inverse().unwrap();
        let mats: Vec<Matrix> = (0..count)
            .map(|_| {
                let mut a = common::matrix(&mut r, n, 1.0);
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
        let f = invariant_flag(&mats, 7).unwrap();
        prop_assert!(f.block_dims.len() >= dims.len());
        for a in &mats {
            prop_assert!(f.lower_residual(a) <= 1e-9);
        }
        // every planted subspace is one of the recovered ones
        let q = f.p.transpose();
        let mut cum = 0;
        for &k in &dims[..dims.len() - 1] {
            cum += k;
            let mut found = false;
            let mut acc = 0;
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
            prop_assert!(found, "planted subspace of dim {cum} missing from {:?}", f.block_dims);
        }
        // spectra of the blocks make up the spectrum of each matrix
        for (m, a) in mats.iter().enumerate() {
            let mut whole: Vec<_> = eigenvalues(a).unwrap().eigenvalues;
            for b in &f.blocks[m] {
                for z in eigenvalues(b).unwrap().eigenvalues {
                    let (i, dist) = whole
                        .iter()
                        .enumerate()
                        .map(|(i, w)| (i, (w - z).norm()))
                        .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                    prop_assert!(dist <= 1e-7, "eigenvalue {z} unmatched ({dist})");
                    whole.remove(i);
                }
            }
            prop_assert!(whole.is_empty());
        }
    }

    #[test]
    fn lyapunov_certificates_decay(seed in any::<u64>(), d in 1usize..=3, atoms in 1usize..=3) {
        // rescale so the letters contract strongly in norm
        let mut ws = explicit_system(seed, d, atoms);
        let letters = ws.letters().unwrap();
        let worst = letters.iter().map(|l| operator_norm(&l.matrix).unwrap()).fold(0.0, f64::max);
        let atoms: Vec<Atom> = letters.iter().map(|l| Atom::explicit(&l.matrix * (1.2 / worst), l.weight)).collect();
        ws = WeightedSystem::new(d, atoms).unwrap();
        let cfg = SearchConfig { max_depth: 40, node_budget: 200_000, ..Default::default() };
        if let Ok(cert) = build_lyapunov(&ws, 0.01, &cfg).unwrap() {
            prop_assert!(cert.c >= 1.0);
            let v = validate_lyapunov(&cert, &grid_letters(&ws, &cfg).unwrap(), 1000);
            prop_assert!(v.violations.is_empty(), "worst ratio {}", v.worst_ratio);
        }
    }

    #[test]
    fn unbounded_jump_words_grow(seed in any::<u64>(), d in 1usize..=3, count in 1usize..=2) {
        let mut r = common::rng(seed);
        let mats: Vec<Matrix> = (0..count).map(|_| common::matrix(&mut r, d, 1.2)).collect();
        if let JumpBound::Unbounded { word } = jump_products_bounded(&mats, &SearchConfig::default()).unwrap() {
            let mut p = Matrix::identity(d, d);
            for &i in &word {
                p = &mats[i] * p;
            }
            let big = p.pow(50);
            prop_assert!(operator_norm(&big).unwrap() > 1.0 + 1e-6);
        }
    }
}

#[test]
fn shear_jump_grows_linearly() {
    let shear = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    match jump_products_bounded(std::slice::from_ref(&shear), &SearchConfig::default()).unwrap() {
        JumpBound::Unbounded { word } => {
            assert!(word.iter().all(|&i| i == 0));
            let p = shear.pow(50 * word.len() as u32);
            assert!(operator_norm(&p).unwrap() >= 50.0);
        }
        other => panic!("{other:?}"),
    }
}
