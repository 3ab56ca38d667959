//! Fixed workloads shared by the criterion benches.

use fermion_tdhf::harness::{generate_instance, ExperimentConfig, Instance};

/// Half-filled thermal instance on `d` modes with unit-norm random couplings.
pub fn thermal_instance(d: usize, seed: u64) -> Instance {
    generate_instance(&ExperimentConfig::thermal_default(d, seed)).expect("benchmark instance")
}
