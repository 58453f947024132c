//! The one-dimensional heteroclinic profile `w(s) = tanh(s/√2)`, the cubic
//! nonlinearity `f(u) = (1 - u²) u`, the interaction constant β and the
//! shrinking-sphere radius.
//!
//! Everything is evaluated in closed form; only β needs quadrature.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Heteroclinic profile `w(s) = tanh(s/√2)`.
pub fn heteroclinic(s: f64) -> f64 {
    (s * FRAC_1_SQRT_2).tanh()
}

/// `sech²(s/√2)` computed without cancellation in the tails.
fn sech2(s: f64) -> f64 {
    let c = (s * FRAC_1_SQRT_2).cosh();
    1.0 / (c * c)
}

/// `w'(s) = (1 - w²)/√2`.
pub fn profile_derivative(s: f64) -> f64 {
    FRAC_1_SQRT_2 * sech2(s)
}

/// `w''(s) = -√2 w w'`, which equals `-f(w)`.
pub fn profile_second_derivative(s: f64) -> f64 {
    -SQRT_2 * heteroclinic(s) * profile_derivative(s)
}

/// Bistable nonlinearity `f(u) = (1 - u²) u`.
#[inline]
pub fn nonlinearity(u: f64) -> f64 {
    (1.0 - u * u) * u
}

/// `f'(u) = 1 - 3u²`.
#[inline]
pub fn nonlinearity_derivative(u: f64) -> f64 {
    1.0 - 3.0 * u * u
}

/// Double-well potential `F(u) = -(1 - u²)²/4`, with `f = -F'`.
pub fn potential(u: f64) -> f64 {
    let d = 1.0 - u * u;
    -0.25 * d * d
}

/// The integrals entering the layer interaction coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionConstants {
    /// β = 6 · `i_tail` / `i_kinetic`.
    pub beta: f64,
    /// ∫ (w')² over the line.
    pub i_kinetic: f64,
    /// ∫ e^{√2 x} (1 - w²) w' over the line.
    pub i_tail: f64,
}

/// Integrand of `i_tail`, written as `e^{√2 x} sech⁴(x/√2) / √2`.
pub fn tail_integrand(x: f64) -> f64 {
    let s = sech2(x);
    FRAC_1_SQRT_2 * (SQRT_2 * x).exp() * s * s
}

/// Integrand of `i_kinetic`.
pub fn kinetic_integrand(x: f64) -> f64 {
    let d = profile_derivative(x);
    d * d
}

/// Truncation radius for which both integrand tails are below `tol / 10`.
///
/// The slower tail is `∫_L^∞ e^{√2x}(1-w²)w' ≈ 8 e^{-√2 L}`.
pub fn truncation_radius(tol: f64) -> f64 {
    (80.0 / tol).ln() / SQRT_2
}

/// Computes β by adaptive quadrature over `[-L, L]`.
pub fn compute_beta(quadrature_tolerance: f64) -> Result<InteractionConstants> {
    compute_beta_on(
        quadrature_tolerance,
        truncation_radius(quadrature_tolerance),
    )
}

/// Same as [`compute_beta`] with an explicit truncation radius.
pub fn compute_beta_on(quadrature_tolerance: f64, radius: f64) -> Result<InteractionConstants> {
    if !(quadrature_tolerance > 0.0 && quadrature_tolerance <= 1e-6) {
        return domain(format!(
            "quadrature tolerance must lie in (0, 1e-6], got {quadrature_tolerance}"
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("truncation radius must be positive, got {radius}"));
    }
    let tol = 0.5 * quadrature_tolerance;
    let i_kinetic = quadrature::integrate(kinetic_integrand, -radius, radius, tol)?;
    let i_tail = quadrature::integrate(tail_integrand, -radius, radius, tol)?;
    Ok(InteractionConstants {
        beta: 6.0 * i_tail / i_kinetic,
        i_kinetic,
        i_tail,
    })
}

/// Radius `√(-2(n-1)t)` of the ancient shrinking sphere.
pub fn shrinking_sphere(n: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    if !(t < 0.0) {
        return domain(format!("shrinking sphere needs t < 0, got {t}"));
    }
    Ok((-2.0 * (n as f64 - 1.0) * t).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn profile_at_origin() {
        assert_eq!(heteroclinic(0.0), 0.0);
        assert_relative_eq!(profile_derivative(0.0), FRAC_1_SQRT_2, epsilon = 1e-16);
    }

    #[test]
    fn profile_near_plus_one_at_ten() {
        let w = heteroclinic(10.0);
        // 1 - tanh(y) = 2 / (1 + e^{2y})
        let oracle = 2.0 / (1.0 + (2.0 * 10.0 / SQRT_2).exp());
        assert!((1.0 - w).abs() < 3e-6);
        assert!(((1.0 - w) - oracle).abs() < 1e-15);
    }

    #[test]
    fn profile_is_odd() {
        for i in 0..200 {
            let s = -20.0 + 0.2 * i as f64;
            assert_eq!(heteroclinic(-s), -heteroclinic(s));
            assert_eq!(profile_derivative(-s), profile_derivative(s));
        }
    }

    #[test]
    fn derivative_tail_asymptotics() {
        for s in [10.0, 15.0, 20.0] {
            let ratio = profile_derivative(s) / (2.0 * SQRT_2 * (-SQRT_2 * s).exp());
            assert!((ratio - 1.0).abs() < 3.0 * (-SQRT_2 * s).exp());
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-4;
        for s in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            let fd = (heteroclinic(s + h) - heteroclinic(s - h)) / (2.0 * h);
            assert!((fd - profile_derivative(s)).abs() < 1e-8);
        }
    }

    #[test]
    fn first_integral() {
        for s in [-5.0, -1.0, 0.3, 4.0] {
            let w = heteroclinic(s);
            assert_relative_eq!(
                profile_derivative(s),
                FRAC_1_SQRT_2 * (1.0 - w * w),
                max_relative = 1e-12
            );
            // (w')²/2 = F(w) - F(±1) = F(w) + 0 ... with F(u) = -(1-u²)²/4
            let wp = profile_derivative(s);
            assert!((0.5 * wp * wp + potential(w)).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_matches_closed_form() {
        let c = compute_beta(1e-12).unwrap();
        assert_relative_eq!(c.i_kinetic, 2.0 * SQRT_2 / 3.0, max_relative = 1e-11);
        assert_relative_eq!(c.i_tail, 8.0 / 3.0, max_relative = 1e-11);
        assert_relative_eq!(c.beta, 12.0 * SQRT_2, max_relative = 1e-10);
    }

    #[test]
    fn tail_integral_by_substitution() {
        // u = e^{2y}, y = x/√2: i_tail = 8 ∫₀^∞ u²/(1+u)⁴ du. Map u = v/(1-v).
        let g = |v: f64| {
            let u = v / (1.0 - v);
            let du = 1.0 / ((1.0 - v) * (1.0 - v));
            8.0 * u * u / (1.0 + u).powi(4) * du
        };
        let v = quadrature::integrate(g, 0.0, 1.0, 1e-14).unwrap();
        assert_relative_eq!(v, 8.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(v, compute_beta(1e-12).unwrap().i_tail, max_relative = 1e-11);
    }

    #[test]
    fn beta_refinement_consistency() {
        let coarse = compute_beta(1e-8).unwrap().beta;
        let fine = compute_beta(1e-12).unwrap().beta;
        assert!((coarse - fine).abs() < 1e-8);
    }

    #[test]
    fn beta_stable_under_doubled_truncation() {
        let tol = 1e-10;
        let l = truncation_radius(tol);
        let a = compute_beta_on(tol, l).unwrap();
        let b = compute_beta_on(tol, 2.0 * l).unwrap();
        assert!((a.i_kinetic - b.i_kinetic).abs() < tol);
        assert!((a.i_tail - b.i_tail).abs() < tol);
    }

    #[test]
    fn beta_rejects_loose_tolerance() {
        assert!(compute_beta(1e-3).is_err());
        assert!(compute_beta(0.0).is_err());
    }

    #[test]
    fn sphere_radius() {
        assert_relative_eq!(shrinking_sphere(2, -2.0).unwrap(), 2.0);
        assert_relative_eq!(shrinking_sphere(3, -4.0).unwrap(), 4.0);
        assert!(shrinking_sphere(1, -1.0).is_err());
        assert!(shrinking_sphere(3, 0.0).is_err());
        assert!(shrinking_sphere(3, 1.0).is_err());
    }

    #[test]
    fn sphere_solves_mcf_ode() {
        let h = 1e-3;
        for n in 2..5 {
            for t in [-0.5, -3.0, -40.0] {
                let rho = shrinking_sphere(n, t).unwrap();
                let fd = (shrinking_sphere(n, t + h).unwrap()
                    - shrinking_sphere(n, t - h).unwrap())
                    / (2.0 * h);
                let exact = -(n as f64 - 1.0) / rho;
                assert!((fd - exact).abs() < 10.0 * h * h / (-t).powf(2.5) + 1e-10);
            }
        }
    }
}
