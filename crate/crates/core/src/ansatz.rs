//! The alternating multi-layer profile `z`, its defect `E` in the radial
//! equation, and the piecewise-exponential weight used to measure it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::profile::{heteroclinic, nonlinearity, profile_derivative};
use crate::toda::{first_approximation, toda_velocities, EtaSolution, LayerState, TodaConstants};

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// `z(r) = Σ_j (-1)^{j+1} w(r - ρ_j) - (1 + (-1)^k)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLayerAnsatz {
    pub layers: LayerState,
}

#[inline]
fn alternating(j: usize) -> f64 {
    // 0-based j: + for the innermost layer
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl MultiLayerAnsatz {
    pub fn new(layers: LayerState) -> Result<Self> {
        layers.check_ordering()?;
        Ok(Self { layers })
    }

    pub fn k(&self) -> usize {
        self.layers.k()
    }

    /// `-1` for even `k`, `0` for odd.
    pub fn parity_offset(&self) -> f64 {
        if self.k() % 2 == 0 {
            -1.0
        } else {
            0.0
        }
    }

    /// Layer-system velocities at the current radii.
    pub fn toda_velocities(&self, n: usize, beta: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.k()];
        toda_velocities(n, beta, &self.layers.rho, &mut v);
        v
    }
}

pub fn evaluate_z(ansatz: &MultiLayerAnsatz, r: f64) -> f64 {
    ansatz
        .layers
        .rho
        .iter()
        .enumerate()
        .map(|(j, rho)| alternating(j) * heteroclinic(r - rho))
        .sum::<f64>()
        + ansatz.parity_offset()
}

/// `E = Σ (-1)^{j+1} w'_j (ρ_j' + (n-1)/r) + f(z) - Σ (-1)^{j+1} f(w_j)`.
pub fn error_term(ansatz: &MultiLayerAnsatz, velocities: &[f64], n: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("radius must be positive, got {r}"));
    }
    if velocities.len() != ansatz.k() {
        return domain(format!(
            "expected {} velocities, got {}",
            ansatz.k(),
            velocities.len()
        ));
    }
    let curvature = (n as f64 - 1.0) / r;
    let mut transport = 0.0;
    let mut separate = 0.0;
    let mut z = ansatz.parity_offset();
    for (j, (&rho, &v)) in ansatz.layers.rho.iter().zip(velocities).enumerate() {
        let s = alternating(j);
        let w = heteroclinic(r - rho);
        transport += s * profile_derivative(r - rho) * (v + curvature);
        separate += s * nonlinearity(w);
        z += s * w;
    }
    Ok(transport + nonlinearity(z) - separate)
}

/// Which form the innermost layer band takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightVariant {
    /// Only the outward term `e^{σ(r - ρ⁰_2)}` in the first band.
    #[default]
    Verbatim,
    /// Both terms `e^{σ(-r + ρ⁰_0)} + e^{σ(r - ρ⁰_2)}` in the first band.
    Symmetric,
}

/// Piecewise-exponential weight `Φ` around reference radii `ρ⁰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub sigma: f64,
    /// `ρ⁰_1 < ... < ρ⁰_k`.
    pub reference: Vec<f64>,
    /// Separation `η`; the virtual inner radius is `ρ⁰_0 = ρ⁰_1 - η`.
    pub eta: f64,
    pub variant: WeightVariant,
}

/// Admissible decay exponents, exclusive.
pub const SIGMA_WINDOW: (f64, f64) = (FRAC_1_SQRT_2, SQRT_2);

pub fn validate_sigma(sigma: f64) -> Result<()> {
    if sigma > SIGMA_WINDOW.0 && sigma < SIGMA_WINDOW.1 {
        Ok(())
    } else {
        domain(format!(
            "sigma = {sigma} outside the admissible window (√2/2, √2) = ({:.6}, {:.6})",
            SIGMA_WINDOW.0, SIGMA_WINDOW.1
        ))
    }
}

impl WeightFunction {
    pub fn new(sigma: f64, reference: Vec<f64>, eta: f64, variant: WeightVariant) -> Result<Self> {
        validate_sigma(sigma)?;
        if reference.is_empty() || !reference.windows(2).all(|w| w[0] < w[1]) {
            return domain("reference radii must be non-empty and strictly increasing");
        }
        if !(eta >= 0.0) {
            return domain(format!("separation must be nonnegative, got {eta}"));
        }
        Ok(Self {
            sigma,
            reference,
            eta,
            variant,
        })
    }
}

/// `Φ(r)`; bands are split at the midpoints of consecutive reference radii.
pub fn weight_phi(weights: &WeightFunction, r: f64) -> f64 {
    let rho = &weights.reference;
    let k = rho.len();
    let s = weights.sigma;
    let rho0 = rho[0] - weights.eta;
    let inward = |inner: f64| (s * (inner - r)).exp();
    let outward = |outer: f64| (s * (r - outer)).exp();

    if r <= 0.5 * (rho0 + rho[0]) {
        return outward(rho[0]);
    }
    let first_band_end = if k > 1 {
        0.5 * (rho[0] + rho[1])
    } else {
        f64::INFINITY
    };
    if r <= first_band_end {
        return match (k, weights.variant) {
            // with a single layer the outward term is absent
            (1, _) => inward(rho0),
            (_, WeightVariant::Verbatim) => outward(rho[1]),
            (_, WeightVariant::Symmetric) => inward(rho0) + outward(rho[1]),
        };
    }
    // band j (1-based, 2..=k) lies between the midpoints around ρ⁰_j
    let j = (1..k)
        .find(|&j| j + 1 == k || r <= 0.5 * (rho[j] + rho[j + 1]))
        .expect("k > 1 here");
    let mut phi = inward(rho[j - 1]);
    if j + 1 < k {
        phi += outward(rho[j + 1]);
    }
    phi
}

/// `max_i |ψ_i| / Φ(r_i)`.
pub fn weighted_norm(values: &[f64], radii: &[f64], weights: &WeightFunction) -> f64 {
    values
        .iter()
        .zip(radii)
        .map(|(v, &r)| v.abs() / weight_phi(weights, r))
        .fold(0.0, f64::max)
}

/// Smallest `C` with `|E(r)| ≤ C (1 + 1/r) Φ(r)` on the given radii.
pub fn check_error_bound(
    ansatz: &MultiLayerAnsatz,
    velocities: &[f64],
    weights: &WeightFunction,
    n: usize,
    radii: &[f64],
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &r in radii {
        let e = error_term(ansatz, velocities, n, r)?;
        c = c.max(e.abs() / ((1.0 + 1.0 / r) * weight_phi(weights, r)));
    }
    Ok(c)
}

/// Spacing of the radii on which [`first_approximation_bound`] samples.
pub const BOUND_SPACING: f64 = 0.05;
/// Distance beyond the outermost layer covered by the sample radii.
pub const BOUND_MARGIN: f64 = 20.0;

/// [`check_error_bound`] for the first approximation at time `t`, moving with
/// the layer-system velocities and weighted around its own radii.
pub fn first_approximation_bound(
    n: usize,
    constants: &TodaConstants,
    eta: &EtaSolution,
    t: f64,
    sigma: f64,
    variant: WeightVariant,
) -> Result<f64> {
    eta.require(t)?;
    let layers = first_approximation(n, constants, eta, t)?;
    let ansatz = MultiLayerAnsatz::new(layers)?;
    let velocities = ansatz.toda_velocities(n, constants.beta);
    let rho = ansatz.layers.rho.clone();
    let r_max = rho[rho.len() - 1] + BOUND_MARGIN;
    let weights = WeightFunction::new(sigma, rho, eta.value(t), variant)?;
    let count = (r_max / BOUND_SPACING).ceil() as usize;
    let radii: Vec<f64> = (0..count)
        .map(|i| (i as f64 + 0.5) * BOUND_SPACING)
        .collect();
    check_error_bound(&ansatz, &velocities, &weights, n, &radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ansatz(rho: &[f64]) -> MultiLayerAnsatz {
        MultiLayerAnsatz::new(LayerState::new(-1.0, rho.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn single_layer_values() {
        let a = ansatz(&[5.0]);
        assert_eq!(evaluate_z(&a, 5.0), 0.0);
        assert!((evaluate_z(&a, 100.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_layer_values() {
        let a = ansatz(&[4.0, 7.0]);
        assert!((evaluate_z(&a, 200.0) + 1.0).abs() < 1e-15);
        assert!((evaluate_z(&a, 1e-3) + 1.0).abs() < 1e-2);
        let mid = 2.0 * heteroclinic(1.5) - 1.0;
        assert!((evaluate_z(&a, 5.5) - mid).abs() < 1e-15);
    }

    #[test]
    fn single_layer_error_vanishes_at_interface() {
        for n in 2..5 {
            let rho = 12.0;
            let a = ansatz(&[rho]);
            let v = [-(n as f64 - 1.0) / rho];
            assert!(error_term(&a, &v, n, rho).unwrap().abs() < 1e-16);
            // closed form (n-1) w'(r-ρ) (ρ - r) / (r ρ)
            let r = rho + 10.0;
            let e = error_term(&a, &v, n, r).unwrap();
            let exact = (n as f64 - 1.0) * profile_derivative(10.0) * (rho - r) / (r * rho);
            assert!((e - exact).abs() < 1e-15);
            assert!(e.abs() < 3.0 * (n as f64) * (-SQRT_2 * 10.0).exp());
        }
    }

    #[test]
    fn mid_gap_defect_is_quadratic_tail_interaction() {
        // f(2a-1) - 2f(a) with a = w(g/2) = 1 - ε, ε ≈ 2e^{-g/√2}: ≈ f''(1) ε² = -24 e^{-√2 g}
        let mut prev = f64::INFINITY;
        for g in [6.0, 8.0, 10.0, 12.0] {
            let a = ansatz(&[30.0, 30.0 + g]);
            let r = 30.0 + 0.5 * g;
            // velocities that cancel curvature at the midpoint isolate the reaction part
            let v = [-1.0 / r, -1.0 / r];
            let e = error_term(&a, &v, 2, r).unwrap();
            let ratio = e / (-SQRT_2 * g).exp();
            assert!((ratio + 24.0).abs() < prev, "g={g}: {ratio}");
            prev = (ratio + 24.0).abs();
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn error_term_rejects_origin() {
        let a = ansatz(&[3.0]);
        assert!(error_term(&a, &[0.0], 2, 0.0).is_err());
        assert!(error_term(&a, &[0.0, 1.0], 2, 1.0).is_err());
    }

    #[test]
    fn sigma_window() {
        assert!(validate_sigma(1.0).is_ok());
        assert!(validate_sigma(2.0).is_err());
        assert!(validate_sigma(FRAC_1_SQRT_2).is_err());
        assert!(validate_sigma(SQRT_2).is_err());
        let msg = validate_sigma(2.0).unwrap_err().to_string();
        assert!(msg.contains("√2/2, √2"), "{msg}");
    }

    #[test]
    fn weight_hand_values_two_layers() {
        // ρ⁰ = (10, 16), η = 6, σ = 1: ρ⁰_0 = 4; bands split at 7 and 13
        let w = WeightFunction::new(1.0, vec![10.0, 16.0], 6.0, WeightVariant::Verbatim).unwrap();
        let cases = [
            (3.0, (3.0f64 - 10.0).exp()),
            (7.0, (7.0f64 - 10.0).exp()),
            (9.0, (9.0f64 - 16.0).exp()),
            (14.0, (10.0f64 - 14.0).exp()),
            (40.0, (10.0f64 - 40.0).exp()),
        ];
        for (r, expected) in cases {
            assert!(
                (weight_phi(&w, r) - expected).abs() < 1e-15 * expected,
                "r={r}"
            );
        }
        let s = WeightFunction::new(1.0, vec![10.0, 16.0], 6.0, WeightVariant::Symmetric).unwrap();
        let expected = (4.0f64 - 9.0).exp() + (9.0f64 - 16.0).exp();
        assert!((weight_phi(&s, 9.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn interior_band_symmetry() {
        let w =
            WeightFunction::new(1.2, vec![10.0, 16.0, 22.0], 6.0, WeightVariant::Verbatim).unwrap();
        let phi = weight_phi(&w, 16.0);
        let term = (1.2f64 * -6.0).exp();
        assert!((phi - 2.0 * term).abs() < 1e-15);
    }

    #[test]
    fn single_layer_weight_is_positive() {
        let w = WeightFunction::new(1.0, vec![10.0], 3.0, WeightVariant::Verbatim).unwrap();
        for r in [0.1, 5.0, 8.5, 10.0, 30.0] {
            assert!(weight_phi(&w, r) > 0.0);
        }
        // beyond the cut at 8.5 only the inward term around ρ⁰_0 = 7 remains
        assert!((weight_phi(&w, 12.0) - (-5.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn weighted_norm_semantics() {
        let w = WeightFunction::new(1.0, vec![10.0, 16.0], 6.0, WeightVariant::Verbatim).unwrap();
        let radii: Vec<f64> = (1..300).map(|i| 0.1 * i as f64).collect();
        let phi: Vec<f64> = radii.iter().map(|&r| weight_phi(&w, r)).collect();
        assert!((weighted_norm(&phi, &radii, &w) - 1.0).abs() < 1e-15);
        assert_eq!(weighted_norm(&vec![0.0; radii.len()], &radii, &w), 0.0);
        let mut bumped = phi.clone();
        bumped[100] *= 2.0;
        assert!((weighted_norm(&bumped, &radii, &w) - 2.0).abs() < 1e-15);
    }
}
