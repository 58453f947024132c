use serde::{Deserialize, Serialize};

use crate::ansatz::{evaluate_z, MultiLayerAnsatz};
use crate::error::{Error, Result};
use crate::pde::RadialField;
use crate::profile::profile_derivative;

/// Projections of `u - z` onto the translation modes `w'(r - ρ_j)` in the
/// discrete `r^{n-1} dr` measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDiagnostics {
    pub coefficients: Vec<f64>,
    /// `G_ij = ⟨w'_i, w'_j⟩`.
    pub gram: Vec<Vec<f64>>,
}

impl ProjectionDiagnostics {
    /// Largest `|G_ij| / √(G_ii G_jj)` over `i ≠ j`.
    pub fn max_coupling(&self) -> f64 {
        let g = &self.gram;
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j {
                    worst = worst.max(g[i][j].abs() / (g[i][i] * g[j][j]).sqrt());
                }
            }
        }
        worst
    }

    /// Coefficients normalized by the Gram diagonal: the mode amplitudes when
    /// the modes are decoupled.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c / self.gram[j][j])
            .collect()
    }
}

pub fn project_residual(
    field: &RadialField,
    ansatz: &MultiLayerAnsatz,
) -> Result<ProjectionDiagnostics> {
    let k = ansatz.k();
    let grid = &field.grid;
    let outer = grid.r_max;
    if let Some(r) = ansatz.layers.rho.iter().find(|&&r| r >= outer) {
        return Err(Error::GridMismatch(format!(
            "layer at {r} outside grid radius {outer}"
        )));
    }
    let mut coefficients = vec![0.0; k];
    let mut gram = vec![vec![0.0; k]; k];
    let mut modes = vec![0.0; k];
    for ((&r, &v), &u) in grid.nodes.iter().zip(&grid.volumes).zip(&field.values) {
        let d = u - evaluate_z(ansatz, r);
        for (m, rho) in modes.iter_mut().zip(&ansatz.layers.rho) {
            *m = profile_derivative(r - rho);
        }
        for i in 0..k {
            coefficients[i] += v * d * modes[i];
            for j in 0..k {
                gram[i][j] += v * modes[i] * modes[j];
            }
        }
    }
    Ok(ProjectionDiagnostics { coefficients, gram })
}
