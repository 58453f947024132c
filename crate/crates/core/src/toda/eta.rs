//! The separation ODE `η' + η/(2t) + e^{-√2 η} = 0`, `η(-1) = 0`, solved
//! backward in time on `t ∈ [-T_end, -1]`.
//!
//! The solve runs in `τ = log(-t)`, where the equation reads
//! `η_τ = -η/2 + e^{τ - √2 η}` and the long horizon becomes a short interval.
//! Dense output is a quintic Hermite interpolant in τ built from `η`, `η_τ`
//! and `η_ττ` at every accepted node.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ode;

/// Largest accepted τ-step; keeps the quintic interpolation error far below
/// the integrator tolerance.
const MAX_TAU_STEP: f64 = 0.01;

/// Right-hand side in τ.
#[inline]
pub fn tau_rhs(tau: f64, eta: f64) -> f64 {
    -0.5 * eta + (tau - SQRT_2 * eta).exp()
}

/// `η_ττ` from the differentiated equation.
#[inline]
fn tau_second_derivative(tau: f64, eta: f64, eta_tau: f64) -> f64 {
    let e = (tau - SQRT_2 * eta).exp();
    e + (-0.5 - SQRT_2 * e) * eta_tau
}

/// Dense solution of the separation ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSolution {
    /// Increasing nodes in `τ = log(-t)`, starting at 0.
    pub tau: Vec<f64>,
    /// `η` at the nodes.
    pub values: Vec<f64>,
    /// `dη/dτ` at the nodes.
    pub tau_derivative: Vec<f64>,
    /// `d²η/dτ²` at the nodes.
    pub tau_second: Vec<f64>,
    pub rel_tol: f64,
}

/// Solves on `[-t_end, -1]`.
pub fn solve_eta(t_end: f64, rel_tol: f64) -> Result<EtaSolution> {
    if !(t_end >= 10.0 && t_end.is_finite()) {
        return domain(format!(
            "eta horizon must be finite and at least 10, got {t_end}"
        ));
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-8) {
        return domain(format!(
            "eta tolerance must lie in (0, 1e-8], got {rel_tol}"
        ));
    }
    let tau_end = t_end.ln();
    let opts = ode::Options::new(rel_tol, rel_tol).with_max_step(MAX_TAU_STEP);
    let mut sol = EtaSolution {
        tau: Vec::new(),
        values: Vec::new(),
        tau_derivative: Vec::new(),
        tau_second: Vec::new(),
        rel_tol,
    };
    ode::solve(
        |tau, y, dy| dy[0] = tau_rhs(tau, y[0]),
        0.0,
        &[0.0],
        tau_end,
        &[],
        &opts,
        |tau, y, dy| {
            sol.tau.push(tau);
            sol.values.push(y[0]);
            sol.tau_derivative.push(dy[0]);
            sol.tau_second.push(tau_second_derivative(tau, y[0], dy[0]));
            Ok(())
        },
    )?;
    Ok(sol)
}

/// Quintic Hermite basis on `[0, 1]` and its θ-derivative, in the order
/// (y0, y0', y0'', y1, y1', y1'').
fn hermite5(theta: f64) -> ([f64; 6], [f64; 6]) {
    let t = theta;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let v = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * t3 - t4 + 0.5 * t5,
    ];
    let d = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        1.5 * t2 - 4.0 * t3 + 2.5 * t4,
    ];
    (v, d)
}

impl EtaSolution {
    /// Largest `|t|` covered.
    pub fn t_end(&self) -> f64 {
        self.tau.last().copied().unwrap_or(0.0).exp()
    }

    /// Whether `t` lies in `[-t_end, -1]`.
    pub fn covers(&self, t: f64) -> bool {
        t <= -1.0 && (-t).ln() <= *self.tau.last().unwrap() * (1.0 + 1e-15)
    }

    /// Checks coverage, for callers that propagate errors.
    pub fn require(&self, t: f64) -> Result<()> {
        if self.covers(t) {
            Ok(())
        } else {
            domain(format!(
                "t = {t} outside the separation solution range [-{}, -1]",
                self.t_end()
            ))
        }
    }

    /// `(η, dη/dτ)` at `τ`.
    pub fn eval_tau(&self, tau: f64) -> (f64, f64) {
        let last = self.tau.len() - 1;
        assert!(
            tau >= -1e-12 && tau <= self.tau[last] * (1.0 + 1e-15) + 1e-12,
            "tau = {tau} outside [0, {}]",
            self.tau[last]
        );
        let i = self.tau.partition_point(|&x| x <= tau).clamp(1, last) - 1;
        let h = self.tau[i + 1] - self.tau[i];
        let theta = ((tau - self.tau[i]) / h).clamp(0.0, 1.0);
        let (v, d) = hermite5(theta);
        let c = [
            self.values[i],
            h * self.tau_derivative[i],
            h * h * self.tau_second[i],
            self.values[i + 1],
            h * self.tau_derivative[i + 1],
            h * h * self.tau_second[i + 1],
        ];
        let mut y = 0.0;
        let mut dy = 0.0;
        for j in 0..6 {
            y += c[j] * v[j];
            dy += c[j] * d[j];
        }
        (y, dy / h)
    }

    /// `η(t)` for `t ∈ [-t_end, -1]`; panics outside that range.
    pub fn value(&self, t: f64) -> f64 {
        self.eval_tau((-t).ln()).0
    }

    /// `dη/dt`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_tau((-t).ln()).1 / t
    }

    /// `|η' + η/(2t) + e^{-√2 η}|` of the interpolant.
    pub fn residual(&self, t: f64) -> f64 {
        let (y, dy_tau) = self.eval_tau((-t).ln());
        (dy_tau / t + y / (2.0 * t) + (-SQRT_2 * y).exp()).abs()
    }

    /// Residual in τ, `|η_τ + η/2 - e^{τ-√2η}|`, which equals `|t|` times
    /// [`Self::residual`].
    pub fn tau_residual(&self, tau: f64) -> f64 {
        let (y, dy) = self.eval_tau(tau);
        (dy - tau_rhs(tau, y)).abs()
    }

    /// Largest τ-residual over the interval midpoints.
    pub fn max_midpoint_tau_residual(&self) -> f64 {
        self.tau
            .windows(2)
            .map(|w| self.tau_residual(0.5 * (w[0] + w[1])))
            .fold(0.0, f64::max)
    }

    /// Largest t-residual over interval midpoints with `|t| ≥ t_min`.
    pub fn max_midpoint_residual(&self, t_min: f64) -> f64 {
        let tau_min = t_min.max(1.0).ln();
        self.tau
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .filter(|&tau| tau >= tau_min)
            .map(|tau| self.residual(-tau.exp()))
            .fold(0.0, f64::max)
    }

    /// `η(t) - (1/√2) log(|t| / log|t|)`, defined for `t < -e`.
    pub fn asymptotic_deviation(&self, t: f64) -> f64 {
        self.value(t) - asymptotic_profile(t)
    }

    /// Largest `|asymptotic_deviation|` over the nodes with `|t| ≥ t_min`.
    pub fn max_asymptotic_deviation(&self, t_min: f64) -> f64 {
        let tau_min = t_min.max(std::f64::consts::E * 1.0001).ln();
        self.tau
            .iter()
            .zip(&self.values)
            .filter(|(&tau, _)| tau >= tau_min)
            .map(|(&tau, &v)| (v - asymptotic_profile(-tau.exp())).abs())
            .fold(0.0, f64::max)
    }
}

/// `(1/√2) log(|t| / log|t|)`.
pub fn asymptotic_profile(t: f64) -> f64 {
    let a = t.abs();
    FRAC_1_SQRT_2 * (a / a.ln()).ln()
}

/// Upper bound `(1/√2) log(1 - √2 (t + 1))` valid for all `t ≤ -1`.
///
/// It follows from `(e^{√2 η})' ≥ -√2` on `t ≤ -1`, since `η/(2t) ≤ 0`.
pub fn eta_upper_bound(t: f64) -> f64 {
    FRAC_1_SQRT_2 * (1.0 - SQRT_2 * (t + 1.0)).ln()
}
