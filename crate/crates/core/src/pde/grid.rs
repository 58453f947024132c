use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::report::sci;

/// Radial (`r^{n-1}` flux weights) or planar (unit weights, no curvature).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    #[default]
    Radial,
    Planar,
}

/// Cell-centered grid on `[0, r_max]`; node `i` sits at `(i + ½) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n_dim: usize,
    pub r_max: f64,
    pub m: usize,
    pub h: f64,
    pub geometry: Geometry,
    pub nodes: Vec<f64>,
    /// Flux weight at face `i` (radius `i h`), `i = 0..=m`.
    pub face_weights: Vec<f64>,
    /// Cell measure `(r_{i+½}^n - r_{i-½}^n)/n`, or `h` when planar.
    pub volumes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n_dim: usize, r_max: f64, m: usize, geometry: Geometry) -> Result<Self> {
        if n_dim < 2 {
            return domain(format!("dimension must be at least 2, got {n_dim}"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return domain(format!("outer radius must be positive, got {r_max}"));
        }
        if m < 8 {
            return domain(format!("grid needs at least 8 cells, got {m}"));
        }
        let h = r_max / m as f64;
        let nodes = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let p = n_dim as i32;
        let (face_weights, volumes) = match geometry {
            Geometry::Radial => (
                (0..=m).map(|i| (i as f64 * h).powi(p - 1)).collect(),
                (0..m)
                    .map(|i| {
                        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                        (b.powi(p) - a.powi(p)) / p as f64
                    })
                    .collect(),
            ),
            Geometry::Planar => (vec![1.0; m + 1], vec![h; m]),
        };
        Ok(Self {
            n_dim,
            r_max,
            m,
            h,
            geometry,
            nodes,
            face_weights,
            volumes,
        })
    }

    /// Grid with spacing as close to `h` as an integer cell count allows.
    pub fn with_spacing(n_dim: usize, r_max: f64, h: f64, geometry: Geometry) -> Result<Self> {
        if !(h > 0.0) {
            return domain(format!("grid spacing must be positive, got {h}"));
        }
        Self::new(n_dim, r_max, (r_max / h).round() as usize, geometry)
    }
}

/// Values on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl RadialField {
    pub fn from_fn(grid: Arc<RadialGrid>, t: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid, values, t }
    }

    /// `Σ V_i u_i`, the discrete integral against `r^{n-1} dr`.
    pub fn mass(&self) -> f64 {
        self.grid
            .volumes
            .iter()
            .zip(&self.values)
            .map(|(v, u)| v * u)
            .sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Zero crossings by linear interpolation between sign-changing nodes.
    pub fn sign_changes(&self) -> Vec<f64> {
        let r = &self.grid.nodes;
        let u = &self.values;
        (0..u.len().saturating_sub(1))
            .filter(|&i| (u[i] < 0.0) != (u[i + 1] < 0.0))
            .map(|i| r[i] + (r[i + 1] - r[i]) * u[i] / (u[i] - u[i + 1]))
            .collect()
    }

    /// Four-point Lagrange interpolation, exact at the nodes.
    pub fn sample(&self, r: f64) -> Result<f64> {
        let nodes = &self.grid.nodes;
        let m = nodes.len();
        let h = self.grid.h;
        let tol = 1e-9 * h;
        if !(r >= nodes[0] - tol && r <= nodes[m - 1] + tol) {
            return Err(Error::GridMismatch(format!(
                "sample radius {r} outside [{}, {}]",
                nodes[0],
                nodes[m - 1]
            )));
        }
        let x = r / h - 0.5;
        let nearest = x.round().clamp(0.0, (m - 1) as f64) as usize;
        if (r - nodes[nearest]).abs() <= tol {
            return Ok(self.values[nearest]);
        }
        let base = (x.floor() as isize - 1).clamp(0, m as isize - 4) as usize;
        let mut value = 0.0;
        for a in base..base + 4 {
            let mut w = 1.0;
            for b in base..base + 4 {
                if a != b {
                    w *= (r - nodes[b]) / (nodes[a] - nodes[b]);
                }
            }
            value += w * self.values[a];
        }
        Ok(value)
    }

    /// Writes `r,u` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,u")?;
        for (r, u) in self.grid.nodes.iter().zip(&self.values) {
            writeln!(w, "{},{}", sci(*r), sci(*u))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centered_layout() {
        let g = RadialGrid::new(3, 2.0, 8, Geometry::Radial).unwrap();
        assert_eq!(g.h, 0.25);
        assert_eq!(g.nodes[0], 0.125);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.face_weights[0], 0.0);
        let total: f64 = g.volumes.iter().sum();
        assert!((total - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(RadialGrid::new(1, 1.0, 10, Geometry::Radial).is_err());
        assert!(RadialGrid::new(2, 1.0, 4, Geometry::Radial).is_err());
        assert!(RadialGrid::new(2, -1.0, 10, Geometry::Radial).is_err());
    }

    #[test]
    fn sampling_is_cubic_exact() {
        let g = Arc::new(RadialGrid::new(2, 5.0, 50, Geometry::Radial).unwrap());
        let f = RadialField::from_fn(g.clone(), 0.0, |r| 1.0 - 2.0 * r + 0.3 * r.powi(3));
        for r in [0.05f64, 0.07, 1.234, 4.95, 4.9] {
            let exact = 1.0 - 2.0 * r + 0.3 * r.powi(3);
            assert!((f.sample(r).unwrap() - exact).abs() < 1e-12);
        }
        assert_eq!(f.sample(g.nodes[17]).unwrap(), f.values[17]);
        assert!(matches!(f.sample(5.0), Err(Error::GridMismatch(_))));
        assert!(f.sample(0.0).is_err());
    }

    #[test]
    fn crossings_by_linear_interpolation() {
        let g = Arc::new(RadialGrid::new(2, 10.0, 100, Geometry::Radial).unwrap());
        let f = RadialField::from_fn(g, 0.0, |r| (r - 3.0) * (r - 7.0));
        let z = f.sign_changes();
        assert_eq!(z.len(), 2);
        assert!((z[0] - 3.0).abs() < 1e-2 && (z[1] - 7.0).abs() < 1e-2);
    }
}
