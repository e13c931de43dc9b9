//! Reproducible random streams: one ChaCha stream per `(seed, stream)` pair.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn run_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
