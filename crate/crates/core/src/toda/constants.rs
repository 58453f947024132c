use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Equilibrium offsets for `k` interacting layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaConstants {
    pub k: usize,
    pub beta: f64,
    /// Gap offsets `b_l`, `l = 1..k-1`.
    pub b: Vec<f64>,
    /// Layer offsets `γ_j`, `j = 1..k`; consecutive differences equal `b`.
    pub gamma: Vec<f64>,
}

impl TodaConstants {
    /// Odd layer counts beyond one have no even-parity far field.
    pub fn is_experimental(&self) -> bool {
        self.k > 1 && self.k % 2 == 1
    }

    /// Centered index `j - (k+1)/2` for 1-based `j`.
    pub fn centered_index(&self, j: usize) -> f64 {
        j as f64 - 0.5 * (self.k as f64 + 1.0)
    }
}

/// `b_l = -(1/√2) log((k-l) l / (2β))`, with `γ` antisymmetric and summing
/// to zero.
pub fn toda_constants(k: usize, beta: f64) -> Result<TodaConstants> {
    if k < 1 {
        return domain("layer count must be at least 1");
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    let b: Vec<f64> = (1..k)
        .map(|l| {
            let a = ((k - l) * l) as f64;
            -FRAC_1_SQRT_2 * (a / (2.0 * beta)).ln()
        })
        .collect();
    let mut gamma = vec![0.0; k];
    for j in 1..=k / 2 {
        // 1-based: γ_{k-j+1} = ½ Σ_{i=j}^{k-j} b_i
        let s: f64 = (j..=k - j).map(|i| b[i - 1]).sum();
        gamma[k - j] = 0.5 * s;
        gamma[j - 1] = -0.5 * s;
    }
    Ok(TodaConstants { k, beta, b, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    const BETA: f64 = 12.0 * SQRT_2;

    #[test]
    fn single_layer() {
        let c = toda_constants(1, BETA).unwrap();
        assert!(c.b.is_empty());
        assert_eq!(c.gamma, vec![0.0]);
    }

    #[test]
    fn two_layers() {
        let c = toda_constants(2, BETA).unwrap();
        let expected = FRAC_1_SQRT_2 * (24.0 * SQRT_2).ln();
        assert!((c.b[0] - expected).abs() < 1e-15);
        assert!((c.b[0] - 2.4922879502820505).abs() < 1e-14);
        assert_eq!(c.gamma, vec![-0.5 * c.b[0], 0.5 * c.b[0]]);
    }

    #[test]
    fn gap_offset_balances_interaction() {
        // β e^{-√2 b_l} = (k-l) l / 2, solved for b by bisection
        for k in 2..8 {
            let c = toda_constants(k, BETA).unwrap();
            for l in 1..k {
                let target = ((k - l) * l) as f64 / 2.0;
                let (mut lo, mut hi) = (-50.0, 50.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if BETA * (-SQRT_2 * mid).exp() > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                assert!((c.b[l - 1] - 0.5 * (lo + hi)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetries() {
        for k in 1..12 {
            let c = toda_constants(k, BETA).unwrap();
            for l in 0..c.b.len() {
                assert_eq!(c.b[l], c.b[k - 2 - l]);
            }
            for j in 0..k {
                assert_eq!(c.gamma[j], -c.gamma[k - 1 - j]);
            }
            assert!(c.gamma.iter().sum::<f64>().abs() < 1e-12);
            for l in 0..c.b.len() {
                assert!((c.gamma[l + 1] - c.gamma[l] - c.b[l]).abs() < 1e-12);
            }
            assert_eq!(c.is_experimental(), k > 1 && k % 2 == 1);
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(toda_constants(0, BETA).is_err());
        assert!(toda_constants(2, -1.0).is_err());
    }
}
