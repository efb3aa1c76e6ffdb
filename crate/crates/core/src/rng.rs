//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha20 keyed by a
//! 64-bit seed. Sub-streams (per trial, per sparsity level, ...) get their
//! seeds from [`derive_seed`], a SplitMix64 fold over the parent seed and a
//! list of integer labels, so that a cell's randomness depends only on its
//! coordinates and never on scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Name of the generator recorded in manifests.
pub const RNG_NAME: &str = "chacha20";
/// Bumped whenever the mapping from seed to sampled values changes.
pub const RNG_STREAM_VERSION: u32 = 1;

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream identified by `labels` under `master`.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(master), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Uniform double in [0, 1) with 53 random bits.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..bound` by rejection sampling.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    assert!(bound > 0);
    let bound = bound as u64;
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % bound) as usize;
        }
    }
}

/// A ±1 sign with equal probability.
pub fn sign<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    if rng.next_u64() >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `k` distinct indices from `0..n`, sorted ascending (Floyd's algorithm).
pub fn sample_subset<R: RngCore + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut chosen = std::collections::BTreeSet::new();
    for j in (n - k)..n {
        let t = uniform_index(rng, j + 1);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}

/// Uniform random permutation of `0..n` (Fisher-Yates).
pub fn permutation<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_index(rng, i + 1);
        p.swap(i, j);
    }
    p
}
