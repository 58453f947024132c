//! Layer dynamics: the separation ODE, equilibrium offsets, the first
//! approximation of the layer radii, the decoupling change of variables,
//! the full layer system and the fixed-point correction.

mod approximation;
mod constants;
mod dynamics;
mod eta;
mod picard;
mod reduction;

pub use approximation::{
    first_approximation, first_approximation_offsets, first_approximation_residual, LayerState,
};
pub use constants::{toda_constants, TodaConstants};
pub use dynamics::{integrate_toda, toda_velocities, TodaOptions, TodaTrajectory};
pub use eta::{asymptotic_profile, eta_upper_bound, solve_eta, EtaSolution};
pub use picard::{
    contraction_threshold, damping_factor, envelope_fit, mode_rates, picard_correction,
    EnvelopeFit, PicardForcing, PicardOptions, PicardResult,
};
pub use reduction::{eigen_residual, reduction_matrices, ReductionMatrices};
