//! Integration of the Toda-type layer system
//! `ρ_j' = -(n-1)/ρ_j + β e^{-√2(ρ_{j+1}-ρ_j)} - β e^{-√2(ρ_j-ρ_{j-1})}`.
//!
//! The solve runs in `τ = log(-t)` with `dρ/dτ = t ρ'(t)`, in either time
//! direction. Backward integration (toward `t → -∞`) is the stable one: the
//! gap mode is repelling forward in time.

use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::approximation::LayerState;
use crate::error::{domain, Error, Result};
use crate::ode;
use crate::report::sci;

/// `dρ/dt` for the layer system. The outermost interaction terms are absent.
pub fn toda_velocities(n: usize, beta: f64, rho: &[f64], out: &mut [f64]) {
    let k = rho.len();
    let curvature = n as f64 - 1.0;
    for j in 0..k {
        let mut v = -curvature / rho[j];
        if j + 1 < k {
            v += beta * (-SQRT_2 * (rho[j + 1] - rho[j])).exp();
        }
        if j > 0 {
            v -= beta * (-SQRT_2 * (rho[j] - rho[j - 1])).exp();
        }
        out[j] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaOptions {
    pub rel_tol: f64,
    /// Smallest admissible gap before reporting a collision.
    pub collision_floor: f64,
    /// Times to record exactly. When empty every accepted step is recorded.
    pub output_times: Vec<f64>,
}

impl Default for TodaOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            collision_floor: 1e-3,
            output_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaTrajectory {
    pub n: usize,
    pub beta: f64,
    pub states: Vec<LayerState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrates from `initial.t` to `t_final` (both negative, either order).
pub fn integrate_toda(
    n: usize,
    beta: f64,
    initial: &LayerState,
    t_final: f64,
    opts: &TodaOptions,
) -> Result<TodaTrajectory> {
    initial.check_ordering()?;
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    if !(initial.t < 0.0 && t_final < 0.0) {
        return domain(format!(
            "times must be negative, got {} and {t_final}",
            initial.t
        ));
    }
    if !(opts.rel_tol > 0.0) || !(opts.collision_floor > 0.0) {
        return domain("tolerance and collision floor must be positive");
    }
    let k = initial.k();
    let tau0 = (-initial.t).ln();
    let tau1 = (-t_final).ln();
    let stops: Vec<f64> = opts.output_times.iter().map(|t| (-t).ln()).collect();
    let record_all = opts.output_times.is_empty();

    let mut states = Vec::new();
    let mut vel = vec![0.0; k];
    let floor = opts.collision_floor;
    let ode_opts = ode::Options::new(opts.rel_tol, opts.rel_tol * 1e-2);
    let stats = ode::solve(
        |tau, y, dy| {
            let t = -tau.exp();
            toda_velocities(n, beta, y, &mut vel);
            for j in 0..k {
                dy[j] = t * vel[j];
            }
        },
        tau0,
        &initial.rho,
        tau1,
        &stops,
        &ode_opts,
        |tau, y, _| {
            let t = -tau.exp();
            for j in 0..k.saturating_sub(1) {
                let gap = y[j + 1] - y[j];
                if !(gap >= floor) {
                    return Err(Error::Collision {
                        t,
                        index: j + 1,
                        gap,
                        floor,
                    });
                }
            }
            if !(y[0] > 0.0) {
                return Err(Error::OrderingViolation { t, rho: y.to_vec() });
            }
            let at_stop = stops.contains(&tau) || tau == tau0 || tau == tau1;
            if record_all || at_stop {
                // t is rebuilt from τ; store the requested time exactly
                let t = if tau == tau0 {
                    initial.t
                } else if tau == tau1 {
                    t_final
                } else {
                    opts.output_times
                        .iter()
                        .copied()
                        .find(|s| (-s).ln() == tau)
                        .unwrap_or(t)
                };
                states.push(LayerState { t, rho: y.to_vec() });
            }
            Ok(())
        },
    )?;
    Ok(TodaTrajectory {
        n,
        beta,
        states,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}

impl TodaTrajectory {
    pub fn k(&self) -> usize {
        self.states.first().map_or(0, |s| s.k())
    }

    pub fn last(&self) -> &LayerState {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Writes `t,rho_1,...,rho_k` rows in 17-significant-digit notation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for j in 1..=self.k() {
            write!(w, ",rho_{j}")?;
        }
        writeln!(w)?;
        for s in &self.states {
            write!(w, "{}", sci(s.t))?;
            for r in &s.rho {
                write!(w, ",{}", sci(*r))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
