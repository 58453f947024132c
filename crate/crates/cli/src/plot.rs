//! Plot-ready columns from a report: measured radii next to their
//! predictions, plus gap panels for several layers.

use aclab::analysis::InterfaceTrack;
use aclab::profile::{compute_beta, shrinking_sphere};
use aclab::report::RunReport;
use aclab::toda::{first_approximation, solve_eta, toda_constants};
use anyhow::Result;

/// Tracks preferred for plotting, in order.
const PREFERENCE: [&str; 2] = ["pde", "toda"];

fn chosen(report: &RunReport) -> Option<&InterfaceTrack> {
    PREFERENCE
        .iter()
        .find_map(|name| report.tracks.get(*name))
        .or_else(|| report.tracks.values().next())
}

/// Header and rows. One layer: `t, rho_1, sphere`. Several: `t`, the radii,
/// the first approximation `theory_j`, then `gap_l` and `eta_plus_b_l`.
pub fn plot_columns(report: &RunReport) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let track = chosen(report);
    let k = track.map_or(report.k, |t| t.k).max(1);
    let n = report.n;
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|j| format!("rho_{j}")));
    if k == 1 {
        header.push("sphere".into());
    } else {
        header.extend((1..=k).map(|j| format!("theory_{j}")));
        header.extend((1..k).map(|l| format!("gap_{l}")));
        header.extend((1..k).map(|l| format!("eta_plus_b_{l}")));
    }
    let Some(track) = track.filter(|t| !t.is_empty()) else {
        return Ok((header, Vec::new()));
    };
    let order = track.time_order();
    let mut rows = Vec::with_capacity(order.len());
    if k == 1 {
        for &i in &order {
            let t = track.times[i];
            rows.push(vec![t, track.radii[i][0], shrinking_sphere(n, t)?]);
        }
        return Ok((header, rows));
    }
    let beta = match report.scalars.get("beta") {
        Some(&b) => b,
        None => compute_beta(1e-13)?.beta,
    };
    let c = toda_constants(k, beta)?;
    let horizon = track.times.iter().fold(10.0f64, |m, t| m.max(-t));
    let eta = solve_eta(horizon, 1e-12)?;
    for &i in &order {
        let t = track.times[i];
        let rho = &track.radii[i];
        let mut row = vec![t];
        row.extend(rho);
        match first_approximation(n, &c, &eta, t) {
            Ok(theory) => row.extend(theory.rho),
            Err(_) => row.extend(std::iter::repeat_n(f64::NAN, k)),
        }
        row.extend(rho.windows(2).map(|w| w[1] - w[0]));
        let e = if eta.covers(t) {
            eta.value(t)
        } else {
            f64::NAN
        };
        row.extend(c.b.iter().map(|b| e + b));
        rows.push(row);
    }
    Ok((header, rows))
}
