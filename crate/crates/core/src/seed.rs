//! Derivation of independent component seeds from one master seed.
//!
//! `derive(master, stream) = splitmix64(master XOR splitmix64(stream))`.
//! Streams: traffic 1, exploration 3, replay 4, random policy 5, and
//! `2 + (chain << 8)` for the initial weights of chain `chain`'s network
//! (the monolithic network uses chain 0's stream).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRAFFIC: u64 = 1;
pub const AGENT_INIT: u64 = 2;
pub const EXPLORATION: u64 = 3;
pub const REPLAY: u64 = 4;
pub const RANDOM_POLICY: u64 = 5;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

pub fn agent_init(master: u64, chain: usize) -> u64 {
    derive(master, AGENT_INIT + ((chain as u64) << 8))
}

pub fn rng(master: u64, stream: u64) -> ChaCha8Rng {
    rng_from(derive(master, stream))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
