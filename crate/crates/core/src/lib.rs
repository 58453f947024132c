//! Numerical toolkit for multi-layer radial solutions of the Allen–Cahn
//! equation and the Toda-type system governing their interfaces.

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod pde;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod toda;

pub use error::{Error, Result};
