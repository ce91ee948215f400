//! Seeded random streams.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Rng = ChaCha8Rng;

/// Stream for `(seed, stream)`; distinct streams are independent.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Stable 64-bit stream id for a label (FNV-1a).
pub fn label_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn normal(r: &mut Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn normal_vec(r: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(r)).collect()
}

pub fn uniform(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

/// Child seed for a labelled consumer of `seed`.
pub fn derive(seed: u64, label: &str) -> u64 {
    stream(seed, label_id(label)).next_u64()
}
