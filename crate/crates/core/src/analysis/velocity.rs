use serde::{Deserialize, Serialize};

use super::interfaces::InterfaceTrack;
use crate::error::{domain, Result};

/// Stencil width of the local quadratic derivative.
pub const STENCIL: usize = 5;

/// Derivative at every sample from a least-squares quadratic through the five
/// nearest samples; exact for quadratics at any spacing.
pub fn local_derivative(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = t.len();
    if m != y.len() || m < STENCIL {
        return domain(format!(
            "derivative needs at least {STENCIL} samples, got {m}"
        ));
    }
    if !t.windows(2).all(|w| w[1] > w[0]) {
        return domain("sample times must increase strictly");
    }
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let start = i.saturating_sub(STENCIL / 2).min(m - STENCIL);
        let mut g = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        let scale = t[start + STENCIL - 1] - t[start];
        for s in start..start + STENCIL {
            let d = (t[s] - t[i]) / scale;
            let basis = [1.0, d, d * d];
            for a in 0..3 {
                rhs[a] += basis[a] * y[s];
                for b in 0..3 {
                    g[a][b] += basis[a] * basis[b];
                }
            }
        }
        out.push(solve3(g, rhs)[1] / scale);
    }
    Ok(out)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let p = (c..3)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Normal velocity minus mean-curvature speed, `ρ' + (n-1)/ρ`, per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureResidual {
    pub times: Vec<f64>,
    pub residuals: Vec<Vec<f64>>,
}

impl CurvatureResidual {
    pub fn max_abs(&self) -> f64 {
        self.residuals
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

pub fn curvature_residual(track: &InterfaceTrack, n: usize) -> Result<CurvatureResidual> {
    let order = track.time_order();
    let t: Vec<f64> = order.iter().map(|&i| track.times[i]).collect();
    let mut residuals = vec![Vec::with_capacity(track.k); t.len()];
    for j in 0..track.k {
        let r: Vec<f64> = order.iter().map(|&i| track.radii[i][j]).collect();
        let dr = local_derivative(&t, &r)?;
        for (s, (v, rad)) in dr.iter().zip(&r).enumerate() {
            residuals[s].push(v + (n as f64 - 1.0) / rad);
        }
    }
    Ok(CurvatureResidual {
        times: t,
        residuals,
    })
}
