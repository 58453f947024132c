//! Change of variables that decouples the linearized layer interaction.
//!
//! `B` maps layer perturbations to consecutive differences plus their sum.
//! The linearized interaction acting on differences is proportional to
//! `C diag(a)`, with `C` the discrete Dirichlet Laplacian and `a_l = (k-l) l`.
//! Conjugating by `C^{1/2}` gives the symmetric matrix
//! `A = C^{1/2} diag(a) C^{1/2}`, whose eigenvectors `Λ` diagonalize the system.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::linalg::{jacobi_eigen, SymmetricEigen};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct ReductionMatrices {
    pub k: usize,
    pub b: DMatrix<f64>,
    pub b_inverse: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub c_eigen: SymmetricEigen,
    pub c_half: DMatrix<f64>,
    pub c_half_inverse: DMatrix<f64>,
    /// Weights `a_l = (k-l) l`.
    pub a_weights: DVector<f64>,
    pub a: DMatrix<f64>,
    /// Eigenpairs of `A`; `vectors` is `Λ`.
    pub a_eigen: SymmetricEigen,
}

/// Builds `B`, `C`, `C^{1/2}` and `A` for `k ≥ 2` layers.
pub fn reduction_matrices(k: usize) -> Result<ReductionMatrices> {
    if k < 2 {
        return domain(format!("reduction needs at least two layers, got {k}"));
    }
    let m = k - 1;
    let mut b = DMatrix::<f64>::zeros(k, k);
    for l in 0..m {
        b[(l, l)] = -1.0;
        b[(l, l + 1)] = 1.0;
    }
    for j in 0..k {
        b[(m, j)] = 1.0;
    }
    let b_inverse = b
        .clone()
        .try_inverse()
        .ok_or(Error::LinAlgFailure { row: m })?;

    let mut c = DMatrix::<f64>::zeros(m, m);
    for l in 0..m {
        c[(l, l)] = 2.0;
        if l + 1 < m {
            c[(l, l + 1)] = -1.0;
            c[(l + 1, l)] = -1.0;
        }
    }
    let c_eigen = jacobi_eigen(&c, MAX_SWEEPS)?;
    let c_half = c_eigen.map_spectrum(f64::sqrt);
    let c_half_inverse = c_eigen.map_spectrum(|x| 1.0 / x.sqrt());

    let a_weights = DVector::from_iterator(m, (1..k).map(|l| ((k - l) * l) as f64));
    let a = &c_half * DMatrix::from_diagonal(&a_weights) * &c_half;
    // symmetrize away rounding before the eigen-solve
    let a = 0.5 * (&a + a.transpose());
    let a_eigen = jacobi_eigen(&a, MAX_SWEEPS)?;

    Ok(ReductionMatrices {
        k,
        b,
        b_inverse,
        c,
        c_eigen,
        c_half,
        c_half_inverse,
        a_weights,
        a,
        a_eigen,
    })
}

impl ReductionMatrices {
    /// `Λᵀ C^{-1/2}`: differences to modal coordinates.
    pub fn to_modes(&self) -> DMatrix<f64> {
        self.a_eigen.vectors.transpose() * &self.c_half_inverse
    }

    /// `C^{1/2} Λ`: modal coordinates to differences.
    pub fn from_modes(&self) -> DMatrix<f64> {
        &self.c_half * &self.a_eigen.vectors
    }

    /// `max |B B⁻¹ - I|`.
    pub fn inverse_defect(&self) -> f64 {
        (&self.b * &self.b_inverse - DMatrix::identity(self.k, self.k)).amax()
    }

    /// `max |C^{1/2} C^{1/2} - C|`.
    pub fn square_root_defect(&self) -> f64 {
        (&self.c_half * &self.c_half - &self.c).amax()
    }

    /// Largest `‖C x - λ x‖` over the computed eigenpairs of `C`.
    pub fn c_eigen_residual(&self) -> f64 {
        eigen_residual(&self.c, &self.c_eigen)
    }

    /// `max |ΛᵀΛ - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let v = &self.a_eigen.vectors;
        (v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols())).amax()
    }
}

/// Largest `‖M x - λ x‖` over the eigenpairs.
pub fn eigen_residual(m: &DMatrix<f64>, e: &SymmetricEigen) -> f64 {
    (0..e.values.len())
        .map(|i| {
            let x = e.vectors.column(i);
            (m * x - x * e.values[i]).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn two_layers() {
        let r = reduction_matrices(2).unwrap();
        assert_eq!(r.c[(0, 0)], 2.0);
        assert!((r.c_half[(0, 0)] - SQRT_2).abs() < 1e-15);
        assert_eq!(r.a_weights[0], 1.0);
        assert!((r.a[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((r.a_eigen.values[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn three_layers_c_spectrum() {
        let r = reduction_matrices(3).unwrap();
        assert!((r.c_eigen.values[0] - 1.0).abs() < 1e-14);
        assert!((r.c_eigen.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn c_spectrum_is_cosine_formula() {
        for k in 2..=10 {
            let r = reduction_matrices(k).unwrap();
            for l in 1..k {
                let exact = 2.0 - 2.0 * (l as f64 * PI / k as f64).cos();
                assert!((r.c_eigen.values[l - 1] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invariants_up_to_ten_layers() {
        for k in 2..=10 {
            let r = reduction_matrices(k).unwrap();
            assert!(r.inverse_defect() < 1e-12);
            assert!(r.square_root_defect() < 1e-12);
            assert!((&r.c_half - r.c_half.transpose()).amax() < 1e-14);
            assert!(r.c_eigen_residual() < 1e-10);
            assert!(r.orthogonality_defect() < 1e-12);
            assert!(r.a_eigen.values.iter().all(|&v| v > 0.0));
            assert!(eigen_residual(&r.a, &r.a_eigen) < 1e-10);
            let roundtrip = r.to_modes() * r.from_modes();
            assert!((roundtrip - DMatrix::identity(k - 1, k - 1)).amax() < 1e-12);
        }
    }

    #[test]
    fn matches_nalgebra_eigenvalues() {
        for k in [4, 7, 10] {
            let r = reduction_matrices(k).unwrap();
            let mut theirs: Vec<f64> =
                r.a.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect();
            theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in r.a_eigen.values.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_single_layer() {
        assert!(reduction_matrices(1).is_err());
    }
}
