//! Exact and mean-field dynamics of interacting fermions on a finite mode space.
//!
//! The crate builds the fermion Fock space over `d` modes as a dense `2^d`
//! dimensional occupation-number basis, evolves density operators exactly under
//! a one-body plus two-body Hamiltonian, extracts reduced number densities
//! `N_m`, and integrates the time-dependent Hartree-Fock (TDHF) equation for the
//! one-body density `F(t)`. The [`harness`] module runs the trace-norm error
//! experiments on top of these pieces.
//!
//! Conventions shared by every module:
//!
//! * composite indices of `H^{⊗n}` are row-major, the first tensor factor is the
//!   most significant digit (see [`TensorIndexScheme`]);
//! * tensor slots and modes are zero-based;
//! * Fock basis vectors are indexed by their occupation bitmask, bit `j` set
//!   meaning mode `j` is occupied, and `|s⟩ = a†_{j1} ⋯ a†_{jn} Ω` for the
//!   occupied modes `j1 < ⋯ < jn`.

// Guards like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod harness;
pub mod rdm;
pub mod states;
pub mod tdhf;
pub mod tensor_ops;

pub use dynamics::{bbgky_residual, evolve, make_propagator, Propagator};
pub use error::{Error, Result};
pub use fock::{
    basis_sector, build_hamiltonian, ladder_annihilate, ladder_create, second_quantize,
    sector_isometry, FockOperator, ModeSpace, TwoBodyOperator,
};
pub use rdm::{
    antisym_power_trace_norm, closure_deviation, closure_product, reduced_density,
    reduced_density_fast, reduced_density_oracle, ReducedDensity,
};
pub use states::{
    mixture_density, particle_moment, quasifree_density, slater_density, thermal_occupations,
    FockDensity, OccupationMeasure,
};
pub use tdhf::{
    hierarchy_remainder, integrate, mean_field_term, tau_horizon, tdhf_rhs, TdhfProblem,
    TdhfState, Trajectory,
};
pub use tensor_ops::{
    antisymmetrizer, embed_one_body, embed_two_body, herm_propagator, kron, operator_norm,
    partial_trace_last, permutation_operator, trace_norm, CMatrix, Permutation,
    TensorIndexScheme, C64,
};
