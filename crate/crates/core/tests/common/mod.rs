#![allow(dead_code)]

use issa_core::linalg::Matrix;
use issa_core::model::{ImpulsiveSystem, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-scale, scale]`.
pub fn matrix(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Matrix {
    Matrix::from_fn(d, d, |_, _| scale * (2.0 * rng.gen::<f64>() - 1.0))
}

pub fn system(rng: &mut ChaCha8Rng, d: usize, modes: usize, tau: f64) -> ImpulsiveSystem {
    let modes = (0..modes)
        .map(|_| Mode::new(matrix(rng, d, 1.0), matrix(rng, d, 1.0)))
        .collect();
    ImpulsiveSystem::new(tau, modes).unwrap()
}

pub fn scalar(z1: f64, z2: f64, tau: f64) -> ImpulsiveSystem {
    ImpulsiveSystem::new(
        tau,
        vec![Mode::new(
            Matrix::from_element(1, 1, z1),
            Matrix::from_element(1, 1, z2),
        )],
    )
    .unwrap()
}

/// `a` and `b` agree up to a relative error `tol`.
pub fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}
