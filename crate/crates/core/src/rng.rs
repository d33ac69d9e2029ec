//! Seeding helpers.
//!
//! Every random draw in the simulator goes through an explicitly passed
//! [`SimRng`]. Trial-level generators are split from a master seed by
//! selecting a ChaCha stream per trial index, so the result of trial `k`
//! does not depend on how many other trials ran or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `index` derived from `master`.
pub fn trial_rng(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    // stream 0 is reserved for the master generator itself
    rng.set_stream(index.wrapping_add(1));
    rng
}
