use serde::{Deserialize, Serialize};

use super::interfaces::InterfaceTrack;
use crate::error::{Error, Result};

/// Per-time differences between two tracks of the same layer count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackComparison {
    pub times: Vec<f64>,
    /// `|ρ_j^a - ρ_j^b|` at each common time.
    pub layer_discrepancy: Vec<Vec<f64>>,
    /// `|g_l^a - g_l^b|` for consecutive gaps.
    pub gap_discrepancy: Vec<Vec<f64>>,
}

impl TrackComparison {
    pub fn max_layer(&self) -> f64 {
        max_of(&self.layer_discrepancy)
    }

    pub fn max_gap(&self) -> f64 {
        max_of(&self.gap_discrepancy)
    }
}

fn max_of(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().fold(0.0, |m: f64, x| m.max(*x))
}

/// Linear interpolation of `reference` onto each time of `sampled` that lies
/// inside the reference time range.
pub fn compare_tracks(
    sampled: &InterfaceTrack,
    reference: &InterfaceTrack,
) -> Result<TrackComparison> {
    if sampled.k != reference.k {
        return Err(Error::WindowMismatch(format!(
            "layer counts differ: {} vs {}",
            sampled.k, reference.k
        )));
    }
    let order = reference.time_order();
    if order.len() < 2 {
        return Err(Error::WindowMismatch(
            "reference track has fewer than 2 samples".into(),
        ));
    }
    let rt: Vec<f64> = order.iter().map(|&i| reference.times[i]).collect();
    let (lo, hi) = (rt[0], rt[rt.len() - 1]);
    let mut out = TrackComparison {
        times: Vec::new(),
        layer_discrepancy: Vec::new(),
        gap_discrepancy: Vec::new(),
    };
    for (s, t) in sampled.times.iter().enumerate() {
        if *t < lo || *t > hi {
            continue;
        }
        let p = rt.partition_point(|x| x < t).clamp(1, rt.len() - 1);
        let (a, b) = (order[p - 1], order[p]);
        let w = if rt[p] > rt[p - 1] {
            (t - rt[p - 1]) / (rt[p] - rt[p - 1])
        } else {
            0.0
        };
        let interp: Vec<f64> = (0..sampled.k)
            .map(|j| (1.0 - w) * reference.radii[a][j] + w * reference.radii[b][j])
            .collect();
        let mine = &sampled.radii[s];
        out.times.push(*t);
        out.layer_discrepancy.push(
            mine.iter()
                .zip(&interp)
                .map(|(x, y)| (x - y).abs())
                .collect(),
        );
        out.gap_discrepancy.push(
            (1..sampled.k)
                .map(|l| ((mine[l] - mine[l - 1]) - (interp[l] - interp[l - 1])).abs())
                .collect(),
        );
    }
    if out.times.is_empty() {
        return Err(Error::WindowMismatch(format!(
            "no sample times inside the reference window [{lo}, {hi}]"
        )));
    }
    Ok(out)
}
