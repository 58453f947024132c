//! Time stepping for `u_t = L u + s f(u)` with diffusion implicit and
//! reaction explicit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{RadialField, RadialGrid};
use super::operator::{operator_parts, OuterBoundary};
use crate::error::{domain, Error, Result};
use crate::linalg::{ThomasFactor, Tridiagonal};
use crate::profile::nonlinearity;

/// Largest admissible `dt · s`; `|f'| ≤ 2` on `[-1, 1]`.
pub const MAX_REACTION_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler diffusion, forward Euler reaction.
    #[default]
    ImexEuler,
    /// Crank–Nicolson diffusion with a Heun predictor/corrector for the reaction.
    CrankNicolsonHeun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub outer: OuterBoundary,
    /// Factor `s` in front of the reaction; `ε^{-2}` for the scaled equation.
    pub reaction_scale: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, outer: OuterBoundary) -> Self {
        Self {
            dt,
            scheme: Scheme::ImexEuler,
            outer,
            reaction_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_REACTION_STEP) {
            return domain(format!("time step must lie in (0, 0.25], got {}", self.dt));
        }
        if !(self.reaction_scale >= 0.0) || self.dt * self.reaction_scale > MAX_REACTION_STEP {
            return domain(format!(
                "reaction step dt·s = {} exceeds 0.25",
                self.dt * self.reaction_scale
            ));
        }
        Ok(())
    }
}

/// A prepared stepper: operator, boundary vector and factored implicit matrix.
#[derive(Debug, Clone)]
pub struct RadialSolver {
    pub grid: Arc<RadialGrid>,
    pub config: SolverConfig,
    op: Tridiagonal,
    bc: Vec<f64>,
    factor: ThomasFactor,
    scratch: Vec<f64>,
    reaction: Vec<f64>,
    predictor: Vec<f64>,
}

impl RadialSolver {
    pub fn new(grid: Arc<RadialGrid>, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let (op, bc) = operator_parts(&grid, config.outer);
        let theta = match config.scheme {
            Scheme::ImexEuler => 1.0,
            Scheme::CrankNicolsonHeun => 0.5,
        };
        let factor = ThomasFactor::new(&op.shifted_identity(-theta * config.dt))?;
        let m = grid.m;
        Ok(Self {
            grid,
            config,
            op,
            bc,
            factor,
            scratch: vec![0.0; m],
            reaction: vec![0.0; m],
            predictor: vec![0.0; m],
        })
    }

    /// Advances `u` by one step of size `config.dt`.
    pub fn step(&mut self, u: &mut [f64]) {
        let dt = self.config.dt;
        let s = self.config.reaction_scale;
        match self.config.scheme {
            Scheme::ImexEuler => {
                for i in 0..u.len() {
                    u[i] += dt * (s * nonlinearity(u[i]) + self.bc[i]);
                }
                self.factor.solve(u);
            }
            Scheme::CrankNicolsonHeun => {
                // explicit half of the diffusion plus boundary data
                self.op.apply(u, &mut self.scratch);
                for i in 0..u.len() {
                    self.scratch[i] = u[i] + 0.5 * dt * self.scratch[i] + dt * self.bc[i];
                    self.reaction[i] = s * nonlinearity(u[i]);
                    self.predictor[i] = self.scratch[i] + dt * self.reaction[i];
                }
                self.factor.solve(&mut self.predictor);
                for i in 0..u.len() {
                    let avg = 0.5 * (self.reaction[i] + s * nonlinearity(self.predictor[i]));
                    u[i] = self.scratch[i] + dt * avg;
                }
                self.factor.solve(u);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Snapshot cadence in steps; the initial and final states are always included.
    pub snapshot_every: usize,
    /// Required zero-crossing count at every snapshot.
    pub expected_interfaces: Option<usize>,
    /// When set, the run must end at or before `-stop_margin`.
    pub stop_margin: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            snapshot_every: 1000,
            expected_interfaces: None,
            stop_margin: None,
        }
    }
}

/// Per-snapshot diagnostics of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub steps: usize,
    /// Step actually used, `(t_final - t_initial) / steps`.
    pub dt: f64,
    pub times: Vec<f64>,
    /// Linear-interpolation zero crossings at each snapshot.
    pub crossings: Vec<Vec<f64>>,
    pub sup_norm: Vec<f64>,
    /// Value at the outermost node.
    pub far_field: Vec<f64>,
}

/// Steps from `initial.t` to `t_final`, reporting each snapshot to `callback`.
pub fn evolve<C>(
    initial: RadialField,
    config: &SolverConfig,
    t_final: f64,
    opts: &EvolveOptions,
    mut callback: C,
) -> Result<(RadialField, EvolveSummary)>
where
    C: FnMut(&RadialField) -> Result<()>,
{
    let t0 = initial.t;
    if !(t_final > t0) {
        return domain(format!(
            "final time {t_final} must exceed initial time {t0}"
        ));
    }
    if let Some(margin) = opts.stop_margin {
        if t_final > -margin {
            return domain(format!(
                "final time {t_final} is within the stop margin {margin} of t = 0"
            ));
        }
    }
    let steps = ((t_final - t0) / config.dt - 1e-9).ceil().max(1.0) as usize;
    let mut cfg = *config;
    cfg.dt = (t_final - t0) / steps as f64;
    let mut solver = RadialSolver::new(initial.grid.clone(), cfg)?;
    let every = opts.snapshot_every.max(1);

    let mut field = initial;
    let mut summary = EvolveSummary {
        steps,
        dt: cfg.dt,
        ..EvolveSummary::default()
    };
    let mut record = |field: &RadialField, summary: &mut EvolveSummary| -> Result<()> {
        let crossings = field.sign_changes();
        if let Some(k) = opts.expected_interfaces {
            if crossings.len() < k {
                return Err(Error::InterfaceLost {
                    t: field.t,
                    expected: k,
                    found: crossings.len(),
                    locations: crossings,
                });
            }
            if crossings.len() > k {
                return Err(Error::SpuriousInterface {
                    t: field.t,
                    expected: k,
                    locations: crossings,
                });
            }
        }
        summary.times.push(field.t);
        summary.sup_norm.push(field.sup_norm());
        summary.far_field.push(*field.values.last().unwrap());
        summary.crossings.push(crossings);
        callback(field)
    };
    record(&field, &mut summary)?;
    for i in 1..=steps {
        solver.step(&mut field.values);
        field.t = if i == steps {
            t_final
        } else {
            t0 + i as f64 * cfg.dt
        };
        if i % every == 0 || i == steps {
            record(&field, &mut summary)?;
        }
    }
    Ok((field, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::Geometry;
    use crate::profile::heteroclinic;

    fn grid(n: usize, r_max: f64, m: usize, geometry: Geometry) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, r_max, m, geometry).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.3, OuterBoundary::Neumann)
            .validate()
            .is_err());
        assert!(SolverConfig::new(0.0, OuterBoundary::Neumann)
            .validate()
            .is_err());
        let mut c = SolverConfig::new(0.1, OuterBoundary::Neumann);
        c.reaction_scale = 4.0;
        assert!(c.validate().is_err());
        c.dt = 0.05;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn equilibrium_is_fixed() {
        for scheme in [Scheme::ImexEuler, Scheme::CrankNicolsonHeun] {
            let g = grid(3, 10.0, 100, Geometry::Radial);
            let mut cfg = SolverConfig::new(0.01, OuterBoundary::Dirichlet(1.0));
            cfg.scheme = scheme;
            let mut s = RadialSolver::new(g.clone(), cfg).unwrap();
            let mut u = vec![1.0; g.m];
            for _ in 0..100 {
                s.step(&mut u);
            }
            assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn uniform_state_follows_scalar_ode() {
        let delta: f64 = 0.01;
        let big_t: f64 = 1.0;
        let exact =
            delta * big_t.exp() / (1.0 + delta * delta * ((2.0 * big_t).exp() - 1.0)).sqrt();
        for scheme in [Scheme::ImexEuler, Scheme::CrankNicolsonHeun] {
            let g = grid(2, 5.0, 50, Geometry::Radial);
            let mut cfg = SolverConfig::new(1e-3, OuterBoundary::Neumann);
            cfg.scheme = scheme;
            let f = RadialField::from_fn(g, 0.0, |_| delta);
            let (out, _) = evolve(f, &cfg, big_t, &EvolveOptions::default(), |_| Ok(())).unwrap();
            for v in &out.values {
                assert!((v - exact).abs() < 1e-4, "{scheme:?}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn planar_profile_is_stationary() {
        let g = grid(2, 20.0, 400, Geometry::Planar);
        let cfg = SolverConfig::new(1e-3, OuterBoundary::Dirichlet(1.0));
        let f = RadialField::from_fn(g.clone(), 0.0, |r| heteroclinic(r - 10.0));
        let start = f.values.clone();
        let (out, _) = evolve(f, &cfg, 10.0, &EvolveOptions::default(), |_| Ok(())).unwrap();
        let drift = out
            .values
            .iter()
            .zip(&start)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        assert!(drift < g.h * g.h * 10.0, "{drift}");
    }

    #[test]
    fn zero_flux_conserves_mass() {
        let g = grid(3, 8.0, 80, Geometry::Radial);
        let mut cfg = SolverConfig::new(0.01, OuterBoundary::Neumann);
        cfg.reaction_scale = 0.0;
        for scheme in [Scheme::ImexEuler, Scheme::CrankNicolsonHeun] {
            cfg.scheme = scheme;
            let mut s = RadialSolver::new(g.clone(), cfg).unwrap();
            let mut f = RadialField::from_fn(g.clone(), 0.0, |r| (-(r - 3.0).powi(2)).exp());
            let m0 = f.mass();
            for _ in 0..50 {
                s.step(&mut f.values);
                assert!((f.mass() - m0).abs() < 1e-12 * m0.abs().max(1.0));
            }
        }
    }

    #[test]
    fn snapshots_and_interface_checks() {
        let g = grid(2, 30.0, 600, Geometry::Radial);
        let cfg = SolverConfig::new(1e-2, OuterBoundary::Dirichlet(1.0));
        let f = RadialField::from_fn(g.clone(), -20.0, |r| heteroclinic(r - 15.0));
        let opts = EvolveOptions {
            snapshot_every: 100,
            expected_interfaces: Some(1),
            stop_margin: Some(1.0),
        };
        let mut seen = 0;
        let (_, summary) = evolve(f.clone(), &cfg, -15.0, &opts, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 6);
        assert_eq!(summary.times.last(), Some(&-15.0));
        assert!(summary.far_field.iter().all(|v| (v - 1.0).abs() < 1e-6));

        // the layer is expected to be the second of two: it reports a lost interface
        let opts = EvolveOptions {
            expected_interfaces: Some(2),
            ..opts
        };
        let r = evolve(f.clone(), &cfg, -15.0, &opts, |_| Ok(()));
        assert!(matches!(r, Err(Error::InterfaceLost { found: 1, .. })));
        let opts = EvolveOptions {
            stop_margin: Some(16.0),
            ..opts
        };
        assert!(evolve(f, &cfg, -15.0, &opts, |_| Ok(())).is_err());
    }

    #[test]
    fn interface_shrinks_like_the_sphere() {
        // a single layer at radius 15 in n = 2 follows ρ² ≈ 225 - 2 (t - t0)
        let g = grid(2, 35.0, 700, Geometry::Radial);
        let cfg = SolverConfig::new(1e-2, OuterBoundary::Dirichlet(1.0));
        let f = RadialField::from_fn(g, 0.0, |r| heteroclinic(r - 15.0));
        let (out, _) = evolve(f, &cfg, 20.0, &EvolveOptions::default(), |_| Ok(())).unwrap();
        let rho = out.sign_changes()[0];
        let predicted = (225.0f64 - 40.0).sqrt();
        assert!((rho - predicted).abs() < 0.05, "{rho} vs {predicted}");
    }
}
