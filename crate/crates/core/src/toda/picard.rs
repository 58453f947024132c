//! Fixed-point construction of the correction `h = ρ - ρ⁰` for `t ≤ -T0`.
//!
//! Writing `ρ = ρ⁰ + h` in the layer system gives
//! `h' + h/(2t) - β DR h = -γ/(2t) + Q(h) + β N(h)`, where `DR` is the
//! interaction Jacobian at the first approximation, `Q_j = x_j²/(2t ρ_j)`
//! with `x_j = ρ_j - √(-2(n-1)t)` is the curvature remainder and `N` the
//! super-linear interaction remainder. In difference coordinates the linear
//! part becomes `(√2/2) e^{-√2η} C diag(a)`; conjugating by `C^{1/2}` and
//! projecting on the eigenvectors of `A` decouples it into scalar modes
//! `ω_i' + ω_i/(2t) - κ_i e^{-√2η} ω_i = G_i`, `κ_i = λ_i/√2`, and the sum
//! `p_k' + p_k/(2t) = Σ_j G_j`. Each mode is integrated from zero data at
//! `-T0` toward `-∞`, where its homogeneous part decays.
//!
//! The modal integrals are evaluated on a uniform `τ = log(-t)` grid with the
//! exponential kernel treated exactly and the forcing by the trapezoid rule.

use std::f64::consts::{FRAC_1_SQRT_2, LN_10, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::approximation::first_approximation_offsets;
use super::constants::TodaConstants;
use super::eta::EtaSolution;
use super::reduction::{reduction_matrices, ReductionMatrices};
use crate::error::{domain, Error, Result};

/// Which forcing terms enter the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PicardForcing {
    /// The constant-offset term `-γ/(2t)`.
    pub include_delta: bool,
    /// The curvature remainder `Q`.
    pub include_radial: bool,
    /// The super-linear interaction remainder `β N`.
    pub include_toda_nonlinearity: bool,
}

impl PicardForcing {
    pub const FULL: Self = Self {
        include_delta: true,
        include_radial: true,
        include_toda_nonlinearity: true,
    };
    pub const DELTA_ONLY: Self = Self {
        include_delta: true,
        include_radial: false,
        include_toda_nonlinearity: false,
    };
    pub const NONE: Self = Self {
        include_delta: false,
        include_radial: false,
        include_toda_nonlinearity: false,
    };
}

impl Default for PicardForcing {
    fn default() -> Self {
        Self::FULL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Uniform `τ` nodes per decade of `|t|`; at least 32.
    pub nodes_per_decade: usize,
    pub max_iters: usize,
    /// Stop once the sup-norm change drops below this.
    pub tol: f64,
    pub forcing: PicardForcing,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            nodes_per_decade: 64,
            max_iters: 50,
            tol: 1e-10,
            forcing: PicardForcing::FULL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardResult {
    pub t0: f64,
    /// Grid times, from `-T0` down to `-T_end`.
    pub t: Vec<f64>,
    /// `h(t)` per grid node, one entry per layer.
    pub h: Vec<Vec<f64>>,
    /// Sup-norm change of each iteration.
    pub changes: Vec<f64>,
    /// Largest ratio of successive changes (0 when fewer than two).
    pub max_ratio: f64,
}

impl PicardResult {
    pub fn iterations(&self) -> usize {
        self.changes.len()
    }

    /// `max_j |h_j(t)|` per node.
    pub fn envelope(&self) -> Vec<f64> {
        self.h
            .iter()
            .map(|v| v.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
            .collect()
    }
}

/// Precomputed first-approximation data at the grid nodes.
struct Grid {
    tau: Vec<f64>,
    t: Vec<f64>,
    sphere: Vec<f64>,
    offsets: Vec<Vec<f64>>,
    /// `e^{-√2(ρ̃_{l+1} - ρ̃_l)}` per node.
    gap_weights: Vec<Vec<f64>>,
    /// `∫ e^{σ - √2 η(σ)} dσ` over each interval (first entry 0).
    d_j: Vec<f64>,
}

fn tau_grid(t0: f64, t_end: f64, nodes_per_decade: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t_end.ln());
    let m = (((b - a) / LN_10) * nodes_per_decade as f64)
        .ceil()
        .max(1.0) as usize;
    (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect()
}

/// `∫_{a}^{b} e^{σ - √2 η(σ)} dσ` by composite Simpson on 4 panels.
fn kernel_increment(eta: &EtaSolution, a: f64, b: f64) -> f64 {
    let f = |s: f64| (s - SQRT_2 * eta.eval_tau(s).0).exp();
    let panels = 4;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    sum * h / 3.0
}

impl Grid {
    fn new(n: usize, constants: &TodaConstants, eta: &EtaSolution, tau: Vec<f64>) -> Self {
        let k = constants.k;
        let t: Vec<f64> = tau.iter().map(|s| -s.exp()).collect();
        let sphere = t
            .iter()
            .map(|&t| (-2.0 * (n as f64 - 1.0) * t).sqrt())
            .collect();
        let offsets: Vec<Vec<f64>> = tau
            .iter()
            .map(|&s| first_approximation_offsets(constants, eta.eval_tau(s).0))
            .collect();
        let gap_weights = offsets
            .iter()
            .map(|o| {
                (0..k - 1)
                    .map(|l| (-SQRT_2 * (o[l + 1] - o[l])).exp())
                    .collect()
            })
            .collect();
        let mut d_j = vec![0.0; tau.len()];
        for m in 1..tau.len() {
            d_j[m] = kernel_increment(eta, tau[m - 1], tau[m]);
        }
        Self {
            tau,
            t,
            sphere,
            offsets,
            gap_weights,
            d_j,
        }
    }

    fn len(&self) -> usize {
        self.tau.len()
    }

    /// Forcing `G(t_m, h)` in layer coordinates.
    fn forcing(
        &self,
        m: usize,
        h: &[f64],
        constants: &TodaConstants,
        sel: PicardForcing,
        out: &mut [f64],
    ) {
        let k = h.len();
        let t = self.t[m];
        out.fill(0.0);
        if sel.include_delta {
            for j in 0..k {
                out[j] -= constants.gamma[j] / (2.0 * t);
            }
        }
        if sel.include_radial {
            for j in 0..k {
                let x = self.offsets[m][j] + h[j];
                let rho = self.sphere[m] + x;
                out[j] += x * x / (2.0 * t * rho);
            }
        }
        if sel.include_toda_nonlinearity && k > 1 {
            // per gap: E_l (e^{-√2 d} - 1 + √2 d), entering +1 at l and -1 at l+1
            for l in 0..k - 1 {
                let x = -SQRT_2 * (h[l + 1] - h[l]);
                let term = constants.beta * self.gap_weights[m][l] * (x.exp_m1() - x);
                out[l] += term;
                out[l + 1] -= term;
            }
        }
    }
}

/// One scalar mode `dω/dτ = -ω/2 - κ e^{τ-√2η} ω + f`, `ω(τ_0) = 0`, with
/// `f_m = t_m G_m` sampled at the nodes.
fn solve_mode(grid: &Grid, kappa: f64, f: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for m in 1..grid.len() {
        let dt = grid.tau[m] - grid.tau[m - 1];
        let a = (-0.5 * dt - kappa * grid.d_j[m]).exp();
        out[m] = a * out[m - 1] + 0.5 * dt * (a * f[m - 1] + f[m]);
    }
}

/// Linear solve: `h` with zero data at the first node for the given forcing.
struct LinearMap {
    k: usize,
    kappa: Vec<f64>,
    to_modes: DMatrix<f64>,
    from_modes: DMatrix<f64>,
    b_inverse: DMatrix<f64>,
}

impl LinearMap {
    fn new(k: usize) -> Result<Self> {
        if k == 1 {
            return Ok(Self {
                k,
                kappa: Vec::new(),
                to_modes: DMatrix::zeros(0, 0),
                from_modes: DMatrix::zeros(0, 0),
                b_inverse: DMatrix::identity(1, 1),
            });
        }
        let r: ReductionMatrices = reduction_matrices(k)?;
        Ok(Self {
            k,
            kappa: r.a_eigen.values.iter().map(|l| FRAC_1_SQRT_2 * l).collect(),
            to_modes: r.to_modes(),
            from_modes: r.from_modes(),
            b_inverse: r.b_inverse,
        })
    }

    /// `forcing[m]` is `G` at node `m`; returns `h` per node.
    fn apply(&self, grid: &Grid, forcing: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = self.k;
        let len = grid.len();
        // modal forcing t·Λᵀ C^{-1/2} (ΔG), and t·ΣG
        let mut modal = vec![vec![0.0; len]; k];
        for m in 0..len {
            let g = &forcing[m];
            let t = grid.t[m];
            if k > 1 {
                let diff = DVector::from_iterator(k - 1, (0..k - 1).map(|l| g[l + 1] - g[l]));
                let w = &self.to_modes * diff;
                for i in 0..k - 1 {
                    modal[i][m] = t * w[i];
                }
            }
            modal[k - 1][m] = t * g.iter().sum::<f64>();
        }
        let mut omega = vec![vec![0.0; len]; k];
        for i in 0..k {
            let kappa = if i < k - 1 { self.kappa[i] } else { 0.0 };
            solve_mode(grid, kappa, &modal[i], &mut omega[i]);
        }
        (0..len)
            .map(|m| {
                let mut p = DVector::<f64>::zeros(k);
                if k > 1 {
                    let w = DVector::from_iterator(k - 1, (0..k - 1).map(|i| omega[i][m]));
                    let diffs = &self.from_modes * w;
                    p.rows_mut(0, k - 1).copy_from(&diffs);
                }
                p[k - 1] = omega[k - 1][m];
                (&self.b_inverse * p).iter().copied().collect()
            })
            .collect()
    }
}

fn validate(eta: &EtaSolution, t0: f64, t_end: f64, nodes_per_decade: usize) -> Result<()> {
    if !(t0 >= 3.0 && t_end > t0) {
        return domain(format!(
            "need 3 <= T0 < T_end, got T0 = {t0}, T_end = {t_end}"
        ));
    }
    if nodes_per_decade < 32 {
        return domain(format!(
            "grid needs at least 32 nodes per decade, got {nodes_per_decade}"
        ));
    }
    eta.require(-t_end)
}

/// Iterates the fixed-point map from `h = 0` on `t ∈ [-T_end, -T0]`.
pub fn picard_correction(
    n: usize,
    constants: &TodaConstants,
    eta: &EtaSolution,
    t0: f64,
    t_end: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    validate(eta, t0, t_end, opts.nodes_per_decade)?;
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    let k = constants.k;
    let grid = Grid::new(
        n,
        constants,
        eta,
        tau_grid(t0, t_end, opts.nodes_per_decade),
    );
    let map = LinearMap::new(k)?;

    let mut h = vec![vec![0.0; k]; grid.len()];
    let mut forcing = vec![vec![0.0; k]; grid.len()];
    let mut changes: Vec<f64> = Vec::new();
    for _ in 0..opts.max_iters {
        for m in 0..grid.len() {
            grid.forcing(m, &h[m], constants, opts.forcing, &mut forcing[m]);
        }
        let next = map.apply(&grid, &forcing);
        let change = h
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        let change = if next.iter().flatten().all(|v| v.is_finite()) {
            change
        } else {
            f64::INFINITY
        };
        changes.push(change);
        h = next;
        if change <= opts.tol {
            let max_ratio = changes
                .windows(2)
                .map(|w| w[1] / w[0])
                .filter(|r| r.is_finite())
                .fold(0.0, f64::max);
            return Ok(PicardResult {
                t0,
                t: grid.t,
                h,
                changes,
                max_ratio,
            });
        }
        let c = changes.len();
        let growing = c >= 3 && changes[c - 1] > changes[c - 2] && changes[c - 2] > changes[c - 3];
        if !change.is_finite() || growing {
            break;
        }
    }
    Err(Error::NoContraction { changes })
}

/// Smallest candidate `T0` whose iteration contracts.
pub fn contraction_threshold(
    n: usize,
    constants: &TodaConstants,
    eta: &EtaSolution,
    candidates: &[f64],
    t_end: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut last = Error::NoContraction {
        changes: Vec::new(),
    };
    for t0 in sorted {
        match picard_correction(n, constants, eta, t0, t_end, opts) {
            Ok(r) => return Ok(r),
            Err(e @ Error::NoContraction { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Damping of the slowest decoupled mode: the largest value over
/// `t ∈ [-T_end, -T0]` of its solution under unit forcing `1/|s|`.
///
/// For rate `κ > 0` this behaves like `1 / (1/2 + κ log T0)`.
pub fn damping_factor(
    kappa: f64,
    eta: &EtaSolution,
    t0: f64,
    t_end: f64,
    nodes_per_decade: usize,
) -> Result<f64> {
    validate(eta, t0, t_end, nodes_per_decade)?;
    let tau = tau_grid(t0, t_end, nodes_per_decade);
    let mut d_j = vec![0.0; tau.len()];
    for m in 1..tau.len() {
        d_j[m] = kernel_increment(eta, tau[m - 1], tau[m]);
    }
    let mut omega = 0.0;
    let mut sup: f64 = 0.0;
    for m in 1..tau.len() {
        let dt = tau[m] - tau[m - 1];
        let a = (-0.5 * dt - kappa * d_j[m]).exp();
        omega = a * omega + 0.5 * dt * (a + 1.0);
        sup = sup.max(omega);
    }
    Ok(sup)
}

/// Decay rates `κ_i = λ_i/√2` of the decoupled modes, ascending.
pub fn mode_rates(k: usize) -> Result<Vec<f64>> {
    Ok(LinearMap::new(k)?.kappa)
}

/// Least-squares fit of the correction envelope `max_j |h_j|` against
/// `1/log|t|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation between the envelope and `1/log|t|`.
    pub correlation: f64,
    pub rms_residual: f64,
    /// RMS of the envelope over the fit window.
    pub rms_envelope: f64,
    pub points: usize,
}

impl EnvelopeFit {
    pub fn relative_rms(&self) -> f64 {
        self.rms_residual / self.rms_envelope
    }
}

/// Fits the envelope on nodes at least `skip_decades` decades beyond `T0`,
/// leaving out the start-up transient from the zero initial data.
pub fn envelope_fit(result: &PicardResult, skip_decades: f64) -> Result<EnvelopeFit> {
    let start = result.t0 * 10f64.powf(skip_decades);
    let env = result.envelope();
    let (x, y): (Vec<f64>, Vec<f64>) = result
        .t
        .iter()
        .zip(&env)
        .filter(|(t, _)| t.abs() >= start * (1.0 - 1e-12))
        .map(|(t, e)| (1.0 / t.abs().ln(), *e))
        .unzip();
    let m = x.len();
    if m < 3 {
        return domain(format!("envelope fit needs at least 3 points, got {m}"));
    }
    let mf = m as f64;
    let mx = x.iter().sum::<f64>() / mf;
    let my = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Ok(EnvelopeFit {
        slope,
        intercept,
        correlation: if syy > 0.0 {
            sxy / (sxx * syy).sqrt()
        } else {
            0.0
        },
        rms_residual: (rss / mf).sqrt(),
        rms_envelope: (y.iter().map(|v| v * v).sum::<f64>() / mf).sqrt(),
        points: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toda::{
        first_approximation, integrate_toda, solve_eta, toda_constants, TodaOptions,
    };

    const BETA: f64 = 12.0 * SQRT_2;

    fn setup(k: usize) -> (TodaConstants, EtaSolution) {
        (
            toda_constants(k, BETA).unwrap(),
            solve_eta(1e6, 1e-12).unwrap(),
        )
    }

    #[test]
    fn zero_forcing_is_a_fixed_point() {
        let (c, eta) = setup(2);
        let opts = PicardOptions {
            forcing: PicardForcing::NONE,
            ..PicardOptions::default()
        };
        let r = picard_correction(2, &c, &eta, 1e2, 1e4, &opts).unwrap();
        assert_eq!(r.changes, vec![0.0]);
        assert!(r.h.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_only_envelope_decays_like_inverse_log() {
        let (c, eta) = setup(2);
        let opts = PicardOptions {
            forcing: PicardForcing::DELTA_ONLY,
            ..PicardOptions::default()
        };
        let r = picard_correction(2, &c, &eta, 1e2, 1e6, &opts).unwrap();
        assert!(r.iterations() <= 2);
        let fit = envelope_fit(&r, 1.0).unwrap();
        assert!(fit.correlation > 0.0, "{fit:?}");
        let env = r.envelope();
        assert!(env[env.len() - 1] < env[env.len() / 2]);
    }

    #[test]
    fn single_mode_quasi_steady_state() {
        // for k = 2 the difference obeys p' + p/(2t) - √2 e^{-√2η} p = -b/(2t);
        // away from T0 it sits near the balance p ≈ -b / (2√2 |t| e^{-√2η} + 1)
        let (c, eta) = setup(2);
        let opts = PicardOptions {
            forcing: PicardForcing::DELTA_ONLY,
            ..PicardOptions::default()
        };
        let r = picard_correction(2, &c, &eta, 1e2, 1e6, &opts).unwrap();
        let m = r.t.len() - 1;
        let t = r.t[m];
        let p = r.h[m][1] - r.h[m][0];
        let rate = 2.0 * SQRT_2 * t.abs() * (-SQRT_2 * eta.value(t)).exp() + 1.0;
        let balance = -c.b[0] / rate;
        assert!(
            (p - balance).abs() < 0.1 * balance.abs(),
            "{p} vs {balance}"
        );
    }

    #[test]
    fn full_forcing_matches_backward_integration() {
        let n = 2;
        let (c, eta) = setup(2);
        let t0 = 1e2;
        let t_end = 1e5;
        let r = picard_correction(n, &c, &eta, t0, t_end, &PicardOptions::default()).unwrap();
        assert!(r.max_ratio < 1.0, "{:?}", r.changes);

        let init = first_approximation(n, &c, &eta, -t0).unwrap();
        let stride = 16;
        let times: Vec<f64> = r.t.iter().step_by(stride).copied().collect();
        let opts = TodaOptions {
            rel_tol: 1e-11,
            output_times: times.clone(),
            ..TodaOptions::default()
        };
        let traj = integrate_toda(n, BETA, &init, -t_end, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for s in &traj.states {
            let m =
                r.t.iter()
                    .position(|&t| (t - s.t).abs() < 1e-9 * t.abs())
                    .unwrap();
            let rho0 = first_approximation(n, &c, &eta, s.t).unwrap();
            for j in 0..2 {
                worst = worst.max((s.rho[j] - rho0.rho[j] - r.h[m][j]).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn single_layer_correction_is_curvature_only() {
        let (c, eta) = setup(1);
        let r = picard_correction(3, &c, &eta, 1e2, 1e4, &PicardOptions::default()).unwrap();
        // offsets vanish for one layer, so the remainder is identically zero
        assert!(r.h.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn damping_decreases_with_t0() {
        let (_, eta) = setup(2);
        let kappa = mode_rates(2).unwrap()[0];
        assert!((kappa - SQRT_2).abs() < 1e-14);
        let mut prev = f64::INFINITY;
        for t0 in [1e2, 1e3, 1e4] {
            let d = damping_factor(kappa, &eta, t0, 1e6, 64).unwrap();
            assert!(d < prev, "T0={t0}: {d}");
            assert!(d * t0.ln() < 2.0);
            prev = d;
        }
    }

    #[test]
    fn threshold_picks_smallest_contracting_candidate() {
        let (c, eta) = setup(2);
        let r = contraction_threshold(2, &c, &eta, &[1e3, 1e2], 1e4, &PicardOptions::default())
            .unwrap();
        assert_eq!(r.t0, 1e2);
    }

    #[test]
    fn rejects_coarse_grid() {
        let (c, eta) = setup(2);
        let opts = PicardOptions {
            nodes_per_decade: 16,
            ..PicardOptions::default()
        };
        assert!(picard_correction(2, &c, &eta, 1e2, 1e4, &opts).is_err());
    }
}
