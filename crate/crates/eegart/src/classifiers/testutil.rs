//! Shared fixtures for classifier tests: seeded Gaussian blob datasets.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::TrainSet;

/// Three isotropic Gaussian blobs with centers at least `separation` sigmas
/// apart. Returns (train, test).
pub fn gaussian_blobs(
    n_train: usize,
    n_test: usize,
    sigma: f64,
    separation: f64,
    seed: u64,
) -> (TrainSet, TrainSet) {
    let d = separation * sigma;
    let centers = [[0.0, 0.0], [d, 0.0], [0.0, d]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut make = |n: usize| -> TrainSet {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 3;
            x.push(vec![
                centers[c][0] + noise.sample(&mut rng),
                centers[c][1] + noise.sample(&mut rng),
            ]);
            y.push(c);
        }
        TrainSet { x, y, n_classes: 3 }
    };
    (make(n_train), make(n_test))
}
