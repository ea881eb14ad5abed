//! Reproducible random streams.
//!
//! Every stochastic routine takes a `u64` seed. Work is split into shards of
//! [`SHARD_SIZE`] items; shard `i` draws from ChaCha8 stream `i` of the seed,
//! so results do not depend on the thread count and are merged in order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const SHARD_SIZE: usize = 4096;

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an unrelated seed for a named purpose (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval `(0, 1)`.
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Runs `f(index, rngs)` for `n` items in parallel shards, returning results
/// in index order. Each shard gets one generator per seed in `seeds`, all on
/// the shard's stream.
pub fn sharded_map<T, F>(n: usize, seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [ChaCha8Rng]) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rngs: Vec<ChaCha8Rng> = seeds.iter().map(|&seed| stream_rng(seed, s as u64)).collect();
            let start = s * SHARD_SIZE;
            let end = (start + SHARD_SIZE).min(n);
            (start..end).map(|i| f(i, &mut rngs)).collect::<Vec<T>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
