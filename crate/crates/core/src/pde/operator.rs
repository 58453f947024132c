//! Conservative discretization of `r^{1-n} (r^{n-1} u_r)_r`.
//!
//! Face fluxes `W_f (u_{i+1} - u_i)/h` are differenced over cell measures.
//! The face at `r = 0` carries zero flux. The outer face either carries zero
//! flux or uses the ghost value `2 u_D - u_{m-1}` for a Dirichlet value `u_D`.

use serde::{Deserialize, Serialize};

use super::grid::{RadialField, RadialGrid};
use crate::linalg::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    Dirichlet(f64),
    Neumann,
}

/// Far-field phase for `k` layers: `-1` for even `k`, `+1` for odd.
pub fn far_field_value(k: usize) -> f64 {
    if k % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// The operator as `L u = T u + g`.
pub fn operator_parts(grid: &RadialGrid, outer: OuterBoundary) -> (Tridiagonal, Vec<f64>) {
    let m = grid.m;
    let h = grid.h;
    let mut t = Tridiagonal::zeros(m);
    let mut g = vec![0.0; m];
    for i in 0..m {
        let scale = 1.0 / (h * grid.volumes[i]);
        let inner = grid.face_weights[i] * scale;
        let outer_w = grid.face_weights[i + 1] * scale;
        if i > 0 {
            t.lower[i] = inner;
            t.diag[i] -= inner;
        }
        if i + 1 < m {
            t.upper[i] = outer_w;
            t.diag[i] -= outer_w;
        } else if let OuterBoundary::Dirichlet(value) = outer {
            t.diag[i] -= 2.0 * outer_w;
            g[i] = 2.0 * outer_w * value;
        }
    }
    (t, g)
}

/// `L u` at every node.
pub fn discrete_operator(field: &RadialField, outer: OuterBoundary) -> Vec<f64> {
    let (t, g) = operator_parts(&field.grid, outer);
    let mut out = vec![0.0; field.values.len()];
    t.apply(&field.values, &mut out);
    for (o, gi) in out.iter_mut().zip(&g) {
        *o += gi;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::Geometry;
    use crate::profile::{heteroclinic, nonlinearity, profile_derivative};
    use std::sync::Arc;

    fn grid(n: usize, r_max: f64, m: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, r_max, m, Geometry::Radial).unwrap())
    }

    #[test]
    fn constants_are_harmonic() {
        let f = RadialField::from_fn(grid(3, 4.0, 40), 0.0, |_| 0.7);
        let lu = discrete_operator(&f, OuterBoundary::Dirichlet(0.7));
        assert!(lu.iter().all(|v| v.abs() < 1e-12));
        let lu = discrete_operator(&f, OuterBoundary::Neumann);
        assert!(lu.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn r_squared_gives_2n() {
        for n in 2..6 {
            let f = RadialField::from_fn(grid(n, 3.0, 60), 0.0, |r| r * r);
            let lu = discrete_operator(&f, OuterBoundary::Neumann);
            // exact cell measures make the interior result exact
            for v in &lu[..lu.len() - 1] {
                assert!((v - 2.0 * n as f64).abs() < 1e-9, "n={n}: {v}");
            }
        }
    }

    #[test]
    fn profile_satisfies_curvature_balance() {
        // L w(r-ρ) + f(w) = (n-1)/r · w'(r-ρ) + O(h²)
        let n = 3;
        let rho = 20.0;
        let g = grid(n, 40.0, 800);
        let f = RadialField::from_fn(g.clone(), 0.0, |r| heteroclinic(r - rho));
        let lu = discrete_operator(&f, OuterBoundary::Dirichlet(1.0));
        let mut worst: f64 = 0.0;
        for (i, &r) in g.nodes.iter().enumerate() {
            if (r - rho).abs() < 10.0 {
                let expected = (n as f64 - 1.0) / r * profile_derivative(r - rho);
                worst = worst.max((lu[i] + nonlinearity(f.values[i]) - expected).abs());
            }
        }
        assert!(worst < 0.1 * g.h * g.h, "{worst}");
    }

    #[test]
    fn far_field_parity() {
        assert_eq!(far_field_value(2), -1.0);
        assert_eq!(far_field_value(3), 1.0);
    }
}
