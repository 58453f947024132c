//! Post-processing of interface tracks: extraction, asymptotic fits,
//! curvature-flow residuals, mode projections and track comparison.

mod compare;
mod fit;
mod interfaces;
mod projection;
mod velocity;

pub use compare::{compare_tracks, TrackComparison};
pub use fit::{
    expected_slopes, fit_asymptotics, fit_line, fit_sphere, AsymptoticFit, LineFit, SphereFit,
    MIN_FIT_DECADES, TAIL_EXCLUSION,
};
pub use interfaces::{alternating_signs, extract_interfaces, track_evolution, InterfaceTrack};
pub use projection::{project_residual, ProjectionDiagnostics};
pub use velocity::{curvature_residual, local_derivative, CurvatureResidual, STENCIL};
