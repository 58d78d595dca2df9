//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream selected by a string key,
//! so the numbers one feature set sees never depend on which other sets ran.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn fnv1a(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Independent stream for `key` under the master `seed`.
pub fn stream(seed: u64, key: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(key));
    rng
}

/// Derives a child seed, e.g. the sample seed of replication `index`.
pub fn derive_seed(seed: u64, key: &str, index: u64) -> u64 {
    let mut rng = stream(seed, key);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
