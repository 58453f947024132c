//! Comparison of fields across grids, and the parabolic scaling check.
//!
//! If `u` solves `u_t = Δu + f(u)` then `u^ε(x, t) = u(x/ε, t/ε²)` solves
//! `u_t = Δu + ε^{-2} f(u)`. A field `u` at time `t` is therefore compared
//! with `u^ε` at time `ε² t`, sampling `u^ε` at `ε r`.

use super::grid::RadialField;
use crate::error::{Error, Result};

/// `max |a(r_i) - b(scale · r_i)|` over the nodes of `a` whose image lies
/// inside the node range of `b`.
pub fn field_discrepancy(a: &RadialField, b: &RadialField, scale: f64) -> Result<f64> {
    let lo = b.grid.nodes[0];
    let hi = *b.grid.nodes.last().unwrap();
    let tol = 1e-9 * b.grid.h;
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for (&r, &u) in a.grid.nodes.iter().zip(&a.values) {
        let s = scale * r;
        if s < lo - tol || s > hi + tol {
            continue;
        }
        worst = worst.max((u - b.sample(s)?).abs());
        used += 1;
    }
    if used == 0 {
        return Err(Error::GridMismatch("no common sample points".into()));
    }
    Ok(worst)
}

/// Discrepancy between `u` at time `t` and the scaled solution `u_eps` at
/// time `ε² t`.
pub fn rescale_check(u: &RadialField, u_eps: &RadialField, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "scale must be positive, got {epsilon}"
        )));
    }
    let expected_t = epsilon * epsilon * u.t;
    if (u_eps.t - expected_t).abs() > 1e-9 * expected_t.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "scaled field is at t = {}, expected {expected_t}",
            u_eps.t
        )));
    }
    if u.grid.n_dim != u_eps.grid.n_dim || u.grid.geometry != u_eps.grid.geometry {
        return Err(Error::GridMismatch("dimension or geometry differs".into()));
    }
    field_discrepancy(u, u_eps, epsilon)
}
