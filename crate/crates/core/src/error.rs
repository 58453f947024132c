use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("adaptive quadrature did not converge within depth {depth} on [{a}, {b}]")]
    NonConvergence { a: f64, b: f64, depth: u32 },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepFailure { x: f64, h: f64 },

    #[error("layer radii not strictly increasing and positive at t = {t}: {rho:?}")]
    OrderingViolation { t: f64, rho: Vec<f64> },

    #[error(
        "Jacobi eigen-solver failed to converge after {sweeps} sweeps (off-diagonal norm {off:e})"
    )]
    EigenFailure { sweeps: usize, off: f64 },

    #[error("layers {index} and {next} collided at t = {t} (gap {gap:e} below floor {floor:e})", next = .index + 1)]
    Collision {
        t: f64,
        index: usize,
        gap: f64,
        floor: f64,
    },

    #[error("fixed-point iteration did not contract: sup-norm changes {changes:?}")]
    NoContraction { changes: Vec<f64> },

    #[error("singular tridiagonal system at row {row}")]
    LinAlgFailure { row: usize },

    #[error("expected {expected} interfaces, found {found} at t = {t}: {locations:?}")]
    InterfaceLost {
        t: f64,
        expected: usize,
        found: usize,
        locations: Vec<f64>,
    },

    #[error(
        "expected {expected} interfaces, found spurious extra crossings at t = {t}: {locations:?}"
    )]
    SpuriousInterface {
        t: f64,
        expected: usize,
        locations: Vec<f64>,
    },

    #[error("fit window too short: spans {decades:.3} decades of |t|, need {required}")]
    WindowTooShort { decades: f64, required: f64 },

    #[error("time windows do not overlap or layer counts differ: {0}")]
    WindowMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
