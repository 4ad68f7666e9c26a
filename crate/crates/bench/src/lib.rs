//! Fixed inputs shared by the benchmarks.

use cavity_squeeze::sampling::{random_stable_model, ModelFamily};
use cavity_squeeze::{InteractionModel, LinearizedSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SIZES: [usize; 4] = [1, 2, 4, 8];

/// A generic stable model with `n` modes, identical on every call.
pub fn generic_model(n: usize) -> InteractionModel {
    random_stable_model(&mut ChaCha8Rng::seed_from_u64(0xBE7C + n as u64), n, ModelFamily::Generic)
}

pub fn generic_system(n: usize) -> LinearizedSystem {
    LinearizedSystem::new(&generic_model(n)).expect("generated models are stable")
}
