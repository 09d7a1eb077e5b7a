//! Shared test support: seeded random workloads and brute-force oracles.
//!
//! The oracles here recompute results from first principles (explicit path
//! enumeration, order enumeration) without calling the engine or the
//! interpreter, so they can be used to check them.

pub mod gen;
pub mod oracle;

pub use rand::Rng;
pub use rand_chacha::ChaCha8Rng;

use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
