//! Shared fixtures for the generator benchmarks.

use prmgen_core::pipeline::{generate_prm, RunConfig};
use prmgen_core::Prm;

/// Configuration used by every benchmark, scaled by class and object count.
pub fn config(classes: usize, objects: usize, seed: u64) -> RunConfig {
    RunConfig {
        classes,
        k_max: 3,
        objects,
        seed,
        ..RunConfig::default()
    }
}

/// A generated model, for benchmarks that start from a fixed PRM.
pub fn model(classes: usize, seed: u64) -> Prm {
    generate_prm(&config(classes, 1, seed)).expect("fixture generation")
}
