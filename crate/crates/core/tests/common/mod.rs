#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsar_core::quant::{QuantizedActivations, TernaryMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ternary(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> TernaryMatrix {
    let v = (0..rows * cols).map(|_| rng.random_range(-1i8..=1)).collect();
    TernaryMatrix::new(rows, cols, v, 1.0).unwrap()
}

pub fn activations(rng: &mut ChaCha8Rng, k: usize) -> QuantizedActivations {
    QuantizedActivations::from_ints((0..k).map(|_| rng.random_range(-127i8..=127)).collect()).unwrap()
}

pub fn rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<QuantizedActivations> {
    (0..n).map(|_| activations(rng, k)).collect()
}
