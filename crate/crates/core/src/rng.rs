//! Seeded randomness.
//!
//! Every random decision in the pipeline draws from a ChaCha8 stream seeded
//! with `seed_from_u64`. Streams that belong to one record (a sentence, a
//! rating item) are derived from the run seed and the record id, so the
//! outcome of a record does not depend on processing order or thread count.
//!
//! Shuffles use the Fisher-Yates walk below rather than `SliceRandom` so the
//! permutation for a given seed is fixed by this crate and not by the `rand`
//! version in use.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name of the pinned generator, written into run metadata.
pub const ALGORITHM: &str = "chacha8 (seed_from_u64) + fisher-yates (next_u64 % (i + 1))";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the stream owned by `key` under the run seed `seed`.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(key.as_bytes());
    fnv1a64(&bytes)
}

pub fn for_key(seed: u64, key: &str) -> ChaCha8Rng {
    seeded(derive_seed(seed, key))
}

pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Uniform index in `0..n`; `n` must be positive.
pub fn index(n: usize, rng: &mut impl RngCore) -> usize {
    (rng.next_u64() % n as u64) as usize
}
