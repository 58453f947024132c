//! Run reports and shared output formatting.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{AsymptoticFit, InterfaceTrack, SphereFit, TrackComparison};

/// Scientific notation with 17 significant digits, enough to round-trip an `f64`.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-snapshot norms of a field run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub sup_norm: Vec<f64>,
    pub far_field: Vec<f64>,
    /// `‖u - z‖` in the weighted norm, `z` built on the extracted interfaces.
    pub weighted_defect: Vec<f64>,
}

/// Mode projections of `u - z` at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub t: f64,
    pub coefficients: Vec<f64>,
    pub max_coupling: f64,
}

/// Everything a run produces besides its CSV companions. Maps keep keys
/// sorted so serialized reports are stable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub k: usize,
    pub n: usize,
    pub scalars: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub tracks: BTreeMap<String, InterfaceTrack>,
    pub fit: Option<AsymptoticFit>,
    pub sphere_fit: Option<SphereFit>,
    pub comparison: Option<TrackComparison>,
    pub norms: Option<NormSeries>,
    pub projections: Vec<ProjectionRecord>,
    /// Diagnostics that could not be produced, keyed by what was attempted.
    pub notes: BTreeMap<String, String>,
}

impl RunReport {
    pub fn new(scenario: &str, k: usize, n: usize) -> Self {
        Self {
            scenario: scenario.to_string(),
            k,
            n,
            ..Self::default()
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn vector(&mut self, key: &str, value: Vec<f64>) {
        self.vectors.insert(key.to_string(), value);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.insert(key.to_string(), value.to_string());
    }
}

/// Writes a header and rows of numbers in [`sci`] format.
pub fn write_table<W: Write>(mut w: W, header: &[String], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| sci(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// `t,rho_1,...,rho_k` in time order.
pub fn write_track_csv<W: Write>(w: W, track: &InterfaceTrack) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=track.k).map(|j| format!("rho_{j}")));
    let rows: Vec<Vec<f64>> = track
        .time_order()
        .into_iter()
        .map(|i| {
            let mut row = vec![track.times[i]];
            row.extend(&track.radii[i]);
            row
        })
        .collect();
    write_table(w, &header, &rows)
}
