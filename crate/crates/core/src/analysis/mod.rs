//! Verification tools: reference solutions, leading-error theory, sweeps.

pub mod front;
pub mod reference;
pub mod sweep;
pub mod theory;

pub use front::{front_speed, level_crossing, max_gradient};
pub use reference::{reference_solve, reference_solve_at, ReferenceConfig};
pub use sweep::{local_error_sweep, measure_dt_star, order_slope, SweepResult, SweepRow};
pub use theory::{
    commutator, commutator_residual, compute_m1_m2, derivatives4, dt_star_theory, expm_dense,
    l2_norm, leading_error_strang, CommutatorTerms, LinearSplitProblem,
};
