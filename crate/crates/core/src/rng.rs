//! Per-sample random streams.
//!
//! Sample `i` of a run with master seed `s` always draws from ChaCha8 keyed
//! by `s` on stream `i`, so the output of a run does not depend on how its
//! samples are distributed across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for sample number `index` under `seed`.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
