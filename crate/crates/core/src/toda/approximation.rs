use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::constants::TodaConstants;
use super::eta::EtaSolution;
use crate::error::{domain, Error, Result};

/// Layer radii at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub t: f64,
    pub rho: Vec<f64>,
}

impl LayerState {
    /// Validates `0 < ρ_1 < ... < ρ_k`.
    pub fn new(t: f64, rho: Vec<f64>) -> Result<Self> {
        let state = Self { t, rho };
        state.check_ordering()?;
        Ok(state)
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    pub fn check_ordering(&self) -> Result<()> {
        let ok = !self.rho.is_empty()
            && self.rho.iter().all(|r| r.is_finite())
            && self.rho[0] > 0.0
            && self.rho.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(())
        } else {
            Err(Error::OrderingViolation {
                t: self.t,
                rho: self.rho.clone(),
            })
        }
    }

    /// Consecutive gaps `ρ_{j+1} - ρ_j`.
    pub fn gaps(&self) -> Vec<f64> {
        self.rho.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Offsets `(j - (k+1)/2) η + γ_j` from the sphere radius.
pub fn first_approximation_offsets(constants: &TodaConstants, eta: f64) -> Vec<f64> {
    (1..=constants.k)
        .map(|j| constants.centered_index(j) * eta + constants.gamma[j - 1])
        .collect()
}

/// `ρ⁰_j(t) = √(-2(n-1)t) + (j - (k+1)/2) η(t) + γ_j`.
pub fn first_approximation(
    n: usize,
    constants: &TodaConstants,
    eta: &EtaSolution,
    t: f64,
) -> Result<LayerState> {
    let sphere = crate::profile::shrinking_sphere(n, t)?;
    if constants.k == 1 {
        return LayerState::new(t, vec![sphere]);
    }
    eta.require(t)?;
    let offsets = first_approximation_offsets(constants, eta.value(t));
    LayerState::new(t, offsets.iter().map(|o| sphere + o).collect())
}

/// Largest `|ρ̃_j' + ρ̃_j/(2t) - β R_j(ρ̃) - γ_j/(2t)|` over samples, where
/// `ρ̃` are the first-approximation offsets and `R_j` the nearest-neighbour
/// interaction.
pub fn first_approximation_residual(
    constants: &TodaConstants,
    eta: &EtaSolution,
    t_samples: &[f64],
) -> Result<f64> {
    let k = constants.k;
    let beta = constants.beta;
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        if k == 1 {
            continue;
        }
        eta.require(t)?;
        if t >= 0.0 {
            return domain(format!("sample time must be negative, got {t}"));
        }
        let e = eta.value(t);
        let de = eta.derivative(t);
        let rho = first_approximation_offsets(constants, e);
        for j in 0..k {
            let c = constants.centered_index(j + 1);
            let mut interaction = 0.0;
            if j + 1 < k {
                interaction += (-SQRT_2 * (rho[j + 1] - rho[j])).exp();
            }
            if j > 0 {
                interaction -= (-SQRT_2 * (rho[j] - rho[j - 1])).exp();
            }
            let lhs = c * de + rho[j] / (2.0 * t) - beta * interaction;
            worst = worst.max((lhs - constants.gamma[j] / (2.0 * t)).abs());
        }
    }
    Ok(worst)
}
