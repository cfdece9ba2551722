//! Shared instance builders for the criterion benchmarks.

use busched_core::generator::{generate, GeneratorParams};
use busched_core::Instance;

/// Seeded large-district instance at the given trip count.
pub fn hcpss_instance(n_trips: usize, seed: u64) -> Instance {
    let mut params = GeneratorParams::hcpss(n_trips);
    params.seed = seed;
    generate(&params).expect("preset parameters are valid")
}
