//! Shared fixtures for the criterion benches.

use sepmix::mixing::{Ensemble, Model};
use sepmix::rng::stream_rng;
use sepmix::SystemShape;

/// Seeded random interior ensemble.
pub fn fixture(dims: &[usize], k: usize, model: Model, seed: u64) -> Ensemble {
    let shape = SystemShape::new(dims.to_vec()).expect("valid shape");
    Ensemble::random(&shape, k, model, &mut stream_rng(seed, 0)).expect("k >= 1")
}
