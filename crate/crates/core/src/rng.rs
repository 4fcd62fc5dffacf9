//! Seeded generators.
//!
//! Every randomized routine draws from a ChaCha stream selected by
//! `(seed, index)`, so results depend only on the seed and the item index and
//! never on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Generator for item `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
