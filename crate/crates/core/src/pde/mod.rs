//! Finite-difference solver for the radial Allen–Cahn equation
//! `u_t = u_rr + (n-1)/r u_r + f(u)` on a cell-centered grid.

mod grid;
mod operator;
mod rescale;
mod solver;

pub use grid::{Geometry, RadialField, RadialGrid};
pub use operator::{discrete_operator, far_field_value, operator_parts, OuterBoundary};
pub use rescale::{field_discrepancy, rescale_check};
pub use solver::{
    evolve, EvolveOptions, EvolveSummary, RadialSolver, Scheme, SolverConfig, MAX_REACTION_STEP,
};
