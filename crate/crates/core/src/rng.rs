//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`]. A run is
//! described by one master seed; each experiment hashes its name into a tag,
//! and replica `i` of that experiment uses the key `master ^ mix(tag)` on
//! stream `i`. Replica streams therefore depend only on `(master, tag, i)`,
//! never on how replicas are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng64;

/// 64-bit FNV-1a hash, used to turn experiment names into stream tags.
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for replica `index` of the stream family `(master, tag)`.
pub fn replica_rng(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ mix(tag));
    rng.set_stream(index);
    rng
}

/// Generator for one-off draws (single samples, CLI debugging commands).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
