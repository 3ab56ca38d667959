//! Seeded experiments on top of the exact and TDHF solvers, with CSV/JSON output.

pub mod config;
pub mod experiments;
pub mod instance;
pub mod output;

pub use config::ExperimentConfig;
pub use experiments::{
    all_passed, run_bbgky_check, run_closure_check, run_error_bound, run_mean_field_sweep,
    run_selftest, Check, ExperimentRow,
};
pub use instance::{generate_instance, Instance};
