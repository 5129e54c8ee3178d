//! Sub-flows of the splitting: exact Neumann diffusion and the pointwise
//! stiff reaction solver.

pub mod diffusion;
pub(crate) mod linalg;
pub mod reaction;
pub(crate) mod rosenbrock;

pub use diffusion::{diffuse_step, trapezoid_mean, DiffusionOperator};
pub use reaction::{react_step, ReactionSolverConfig};
