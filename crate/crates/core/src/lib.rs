//! Adaptive Strang splitting for stiff 1D reaction-diffusion systems.
//!
//! A step of the Strang scheme `S2` is paired with a shifted variant
//! `S2,eps` sharing most substeps; their difference drives the step size.
//! Optional probe re-splittings estimate the critical step beyond which that
//! estimate stops bounding the true local error, and adapt `eps`.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod field;
pub mod grid;
pub mod integrators;
pub mod model;
pub mod models;
pub mod norm;
pub mod splitting;

pub use nalgebra;

pub use controller::{
    accept_step, adapt_epsilon, estimate_c0_omega, estimate_dt_star, next_dt, probe_errors,
    run_adaptive, run_embedded, ControllerConfig, ControllerState, ProbePolicy, ProbeSet,
    RejectReason, RunOutput, StepRecord,
};
pub use error::{Error, Result};
pub use field::FieldState;
pub use grid::Grid1D;
pub use integrators::{diffuse_step, react_step, DiffusionOperator, ReactionSolverConfig};
pub use model::{
    ClosureReaction, Event, LinearReaction, ModelSpec, Reaction, ScalarReaction, ZeroReaction,
};
pub use norm::{monitored_err, normalized_l2_diff, NormSpec};
pub use splitting::{PairStepResult, SchemeId, SchemeKind, Splitter, Substep};
