use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pde::{evolve, EvolveOptions, EvolveSummary, RadialField, SolverConfig};
use crate::toda::TodaTrajectory;

/// Secant iterations on the local cubic after the linear first guess.
const SECANT_ITERATIONS: usize = 2;

/// Zero crossings of a field, exactly `expected_k` of them.
///
/// Each bracketing pair of nodes is refined by secant steps on the cubic
/// through the four surrounding nodes.
pub fn extract_interfaces(field: &RadialField, expected_k: usize) -> Result<Vec<f64>> {
    let u = &field.values;
    let r = &field.grid.nodes;
    let mut found = Vec::new();
    for i in 0..u.len().saturating_sub(1) {
        if (u[i] < 0.0) == (u[i + 1] < 0.0) {
            continue;
        }
        let (lo, hi) = (r[i], r[i + 1]);
        let eval = |x: f64| field.sample(x).unwrap_or(f64::NAN);
        let (mut x0, mut f0) = (lo, u[i]);
        let (mut x1, mut f1) = (hi, u[i + 1]);
        let mut x = x1 - f1 * (x1 - x0) / (f1 - f0);
        for _ in 0..SECANT_ITERATIONS {
            let fx = eval(x);
            if !fx.is_finite() || fx == 0.0 {
                break;
            }
            // keep the secant pair closest to the root
            (x0, f0, x1, f1) = (x1, f1, x, fx);
            if f1 == f0 {
                break;
            }
            x = (x1 - f1 * (x1 - x0) / (f1 - f0)).clamp(lo, hi);
        }
        found.push(x);
    }
    match found.len().cmp(&expected_k) {
        std::cmp::Ordering::Less => Err(Error::InterfaceLost {
            t: field.t,
            expected: expected_k,
            found: found.len(),
            locations: found,
        }),
        std::cmp::Ordering::Greater => Err(Error::SpuriousInterface {
            t: field.t,
            expected: expected_k,
            locations: found,
        }),
        std::cmp::Ordering::Equal => Ok(found),
    }
}

/// Interface radii over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrack {
    pub k: usize,
    pub times: Vec<f64>,
    /// Strictly increasing radii per time.
    pub radii: Vec<Vec<f64>>,
    /// `+1` where the field crosses from negative to positive going outward.
    pub signs: Vec<i8>,
    /// Set once a snapshot had the wrong crossing count; later snapshots are ignored.
    pub truncated: bool,
    /// The first extraction failure, if any.
    pub truncation: Option<String>,
}

/// Crossing directions of the alternating profile: `+1, -1, +1, ...`.
pub fn alternating_signs(k: usize) -> Vec<i8> {
    (0..k).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect()
}

impl InterfaceTrack {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            times: Vec::new(),
            radii: Vec::new(),
            signs: alternating_signs(k),
            truncated: false,
            truncation: None,
        }
    }

    pub fn push(&mut self, t: f64, radii: Vec<f64>) -> Result<()> {
        if radii.len() != self.k {
            return domain(format!("expected {} radii, got {}", self.k, radii.len()));
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::OrderingViolation { t, rho: radii });
        }
        self.times.push(t);
        self.radii.push(radii);
        Ok(())
    }

    /// Extracts and appends the crossings of `field`; a wrong count marks the
    /// track truncated instead of failing.
    pub fn record(&mut self, field: &RadialField) -> Result<()> {
        if self.truncated {
            return Ok(());
        }
        match extract_interfaces(field, self.k) {
            Ok(r) => self.push(field.t, r),
            Err(e @ (Error::InterfaceLost { .. } | Error::SpuriousInterface { .. })) => {
                self.truncated = true;
                self.truncation = Some(e.to_string());
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    pub fn from_toda(traj: &TodaTrajectory) -> Self {
        let mut track = Self::new(traj.k());
        for s in &traj.states {
            track.times.push(s.t);
            track.radii.push(s.rho.clone());
        }
        track
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Layer `j` (0-based) over time.
    pub fn layer(&self, j: usize) -> Vec<f64> {
        self.radii.iter().map(|r| r[j]).collect()
    }

    /// Indices ordered by increasing time.
    pub fn time_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.times[a].partial_cmp(&self.times[b]).unwrap());
        idx
    }
}

/// Evolves `initial` to `t_final`, recording crossings every `snapshot_every`
/// steps. Losing or gaining a crossing truncates the track but not the run.
pub fn track_evolution(
    initial: RadialField,
    config: &SolverConfig,
    t_final: f64,
    snapshot_every: usize,
    k: usize,
) -> Result<(RadialField, InterfaceTrack, EvolveSummary)> {
    let mut track = InterfaceTrack::new(k);
    let opts = EvolveOptions {
        snapshot_every,
        ..EvolveOptions::default()
    };
    let (last, summary) = evolve(initial, config, t_final, &opts, |f| track.record(f))?;
    Ok((last, track, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{evaluate_z, MultiLayerAnsatz};
    use crate::pde::{Geometry, RadialGrid};
    use crate::profile::heteroclinic;
    use crate::toda::LayerState;
    use std::sync::Arc;

    fn grid(r_max: f64, h: f64) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::with_spacing(2, r_max, h, Geometry::Radial).unwrap())
    }

    #[test]
    fn single_profile() {
        let f = RadialField::from_fn(grid(12.0, 0.05), 0.0, |r| heteroclinic(r - 5.0));
        let r = extract_interfaces(&f, 1).unwrap();
        assert!((r[0] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn two_layer_ansatz_roots() {
        let a = MultiLayerAnsatz::new(LayerState::new(-1.0, vec![4.0, 7.0]).unwrap()).unwrap();
        let f = RadialField::from_fn(grid(15.0, 0.05), 0.0, |r| evaluate_z(&a, r));
        let r = extract_interfaces(&f, 2).unwrap();
        // bisection on the analytic profile is the oracle
        let root = |mut lo: f64, mut hi: f64| {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (evaluate_z(&a, lo) < 0.0) == (evaluate_z(&a, mid) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let exact = [root(3.0, 5.0), root(6.0, 8.0)];
        for j in 0..2 {
            assert!((r[j] - exact[j]).abs() < 1e-5, "{} vs {}", r[j], exact[j]);
        }
    }

    #[test]
    fn lost_and_spurious() {
        let f = RadialField::from_fn(grid(10.0, 0.05), -3.0, |_| -1.0);
        match extract_interfaces(&f, 1) {
            Err(Error::InterfaceLost { t, found, .. }) => {
                assert_eq!(t, -3.0);
                assert_eq!(found, 0);
            }
            other => panic!("{other:?}"),
        }
        let f = RadialField::from_fn(grid(10.0, 0.05), 0.0, |r| (r - 2.0) * (r - 6.0));
        assert!(matches!(
            extract_interfaces(&f, 1),
            Err(Error::SpuriousInterface { .. })
        ));
    }

    #[test]
    fn track_truncates_on_lost_interface() {
        let g = grid(10.0, 0.05);
        let mut track = InterfaceTrack::new(1);
        track
            .record(&RadialField::from_fn(g.clone(), -2.0, |r| {
                heteroclinic(r - 5.0)
            }))
            .unwrap();
        track
            .record(&RadialField::from_fn(g.clone(), -1.0, |_| 1.0))
            .unwrap();
        track
            .record(&RadialField::from_fn(g, 0.0, |r| heteroclinic(r - 4.0)))
            .unwrap();
        assert!(track.truncated);
        assert_eq!(track.len(), 1);
        assert!(track.truncation.as_deref().unwrap().contains("found 0"));
    }
}
