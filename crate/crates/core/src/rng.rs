//! Deterministic random substreams.
//!
//! Every trajectory draws from its own ChaCha stream selected by
//! `(master seed, domain, index)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Domains keep unrelated consumers of the same master seed apart.
pub mod domain {
    pub const SAID: u64 = 0x5A1D;
    pub const HOMODYNE: u64 = 0x40D7;
    pub const BOB: u64 = 0xB0B;
    pub const BOOTSTRAP: u64 = 0xB007;
    pub const NULL_MODEL: u64 = 0x2011;
    pub const NOISE_CHECK: u64 = 0x7015E;
    pub const VALIDATE: u64 = 0x7A11D;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(master: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(master ^ mix64(domain)));
    rng.set_stream(index);
    rng
}
