//! Named random streams derived from one master seed.
//!
//! Each subsystem (sampler, dataset, init, ...) draws from its own stream so
//! that changing how often one subsystem consumes randomness never perturbs
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::retrieval::hashing::fnv1a64;

pub const SAMPLER: &str = "sampler";
pub const DATASET: &str = "dataset";
pub const INIT: &str = "init";
pub const SHUFFLE: &str = "shuffle";

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, name: &str) -> u64 {
    mix(master ^ fnv1a64(name.as_bytes()))
}

pub fn stream_rng(master: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, name))
}

/// Sub-stream of a named stream, e.g. one per epoch or per cluster.
pub fn substream_rng(master: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(stream_seed(master, name) ^ mix(index)))
}
