//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a root seed; independent
//! workers take distinct stream indices, so results do not depend on the
//! number of threads that happen to run them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
