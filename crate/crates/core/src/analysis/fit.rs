//! Least-squares fits of interface tracks against the predicted asymptotics.

use serde::{Deserialize, Serialize};

use super::interfaces::InterfaceTrack;
use crate::error::{domain, Error, Result};
use crate::toda::asymptotic_profile;

/// Minimum span of the fit window in decades of `|t|`.
pub const MIN_FIT_DECADES: f64 = 1.5;
/// Fraction of the `log|t|` range nearest `t = 0` left out of the fit.
pub const TAIL_EXCLUSION: f64 = 0.1;

/// Straight line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return domain(format!("line fit needs at least 3 paired points, got {n}"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return domain("line fit abscissae are all equal");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms: (ss / nf).sqrt(),
        stderr: (ss / (nf - 2.0) / sxx).sqrt(),
    })
}

/// Fit of each layer's offset from the shrinking sphere against
/// `(1/√2) ln(|t| / ln|t|)`; the predicted slope of layer `j` is `j - (k+1)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub n: usize,
    pub k: usize,
    pub layers: Vec<LineFit>,
    pub expected_slopes: Vec<f64>,
    /// `(t_min, t_max)` of the samples used.
    pub window: (f64, f64),
    pub decades: f64,
    pub points: usize,
}

impl AsymptoticFit {
    pub fn slopes(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.slope).collect()
    }

    /// `max_j |slope_j - expected_j| / |expected_j|` over layers with a
    /// nonzero prediction.
    pub fn max_relative_slope_error(&self) -> f64 {
        self.layers
            .iter()
            .zip(&self.expected_slopes)
            .filter(|(_, e)| **e != 0.0)
            .map(|(l, e)| ((l.slope - e) / e).abs())
            .fold(0.0, f64::max)
    }

    /// `max_j |slope_j - expected_j|`, meaningful for the zero-slope middle layer.
    pub fn max_absolute_slope_error(&self) -> f64 {
        self.layers
            .iter()
            .zip(&self.expected_slopes)
            .map(|(l, e)| (l.slope - e).abs())
            .fold(0.0, f64::max)
    }
}

pub fn expected_slopes(k: usize) -> Vec<f64> {
    let mid = (k as f64 + 1.0) / 2.0;
    (1..=k).map(|j| j as f64 - mid).collect()
}

/// Indices of samples in the fit window: `|t| > e`, with the part of the
/// `log|t|` range closest to zero dropped.
fn fit_window(times: &[f64]) -> Result<(Vec<usize>, f64, f64)> {
    let usable: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] < -std::f64::consts::E)
        .collect();
    if usable.len() < 3 {
        return Err(Error::WindowTooShort {
            decades: 0.0,
            required: MIN_FIT_DECADES,
        });
    }
    let logs = |i: usize| (-times[i]).log10();
    let hi = usable.iter().map(|&i| logs(i)).fold(f64::MIN, f64::max);
    let lo = usable.iter().map(|&i| logs(i)).fold(f64::MAX, f64::min);
    let cut = lo + TAIL_EXCLUSION * (hi - lo);
    let kept: Vec<usize> = usable.into_iter().filter(|&i| logs(i) >= cut).collect();
    let decades = hi - cut;
    if decades < MIN_FIT_DECADES || kept.len() < 3 {
        return Err(Error::WindowTooShort {
            decades,
            required: MIN_FIT_DECADES,
        });
    }
    Ok((kept, -(10f64.powf(hi)), -(10f64.powf(cut))))
}

/// Fits `ρ_j(t) - √(-2(n-1)t)` against `(1/√2) ln(|t|/ln|t|)` per layer.
pub fn fit_asymptotics(track: &InterfaceTrack, n: usize) -> Result<AsymptoticFit> {
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    let (idx, t_min, t_max) = fit_window(&track.times)?;
    let x: Vec<f64> = idx
        .iter()
        .map(|&i| asymptotic_profile(track.times[i]))
        .collect();
    let c = 2.0 * (n as f64 - 1.0);
    let layers = (0..track.k)
        .map(|j| {
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| track.radii[i][j] - (-c * track.times[i]).sqrt())
                .collect();
            fit_line(&x, &y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticFit {
        n,
        k: track.k,
        layers,
        expected_slopes: expected_slopes(track.k),
        window: (t_min, t_max),
        decades: (t_min / t_max).log10(),
        points: idx.len(),
    })
}

/// Fit of a single layer to `√(-2(n-1)t + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub c: f64,
    /// Same fit restricted to the earlier and later halves of the samples.
    pub c_first_half: f64,
    pub c_second_half: f64,
    pub max_deviation: f64,
}

impl SphereFit {
    pub fn drift(&self) -> f64 {
        (self.c_first_half - self.c_second_half).abs()
    }
}

/// Least squares for `c` in `ρ² = -2(n-1)t + c`, which is linear in `c`.
pub fn fit_sphere(times: &[f64], radii: &[f64], n: usize) -> Result<SphereFit> {
    if times.len() != radii.len() || times.len() < 4 {
        return domain("sphere fit needs at least 4 paired samples");
    }
    let a = 2.0 * (n as f64 - 1.0);
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].partial_cmp(&times[j]).unwrap());
    let mean_c = |ix: &[usize]| {
        ix.iter()
            .map(|&i| radii[i] * radii[i] + a * times[i])
            .sum::<f64>()
            / ix.len() as f64
    };
    let c = mean_c(&order);
    let half = order.len() / 2;
    let max_deviation = order
        .iter()
        .map(|&i| (radii[i] - (c - a * times[i]).max(0.0).sqrt()).abs())
        .fold(0.0, f64::max);
    Ok(SphereFit {
        c,
        c_first_half: mean_c(&order[..half]),
        c_second_half: mean_c(&order[half..]),
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 2.5, epsilon = 1e-13);
        assert_relative_eq!(f.intercept, -1.0, epsilon = 1e-12);
        assert!(f.rms < 1e-12 && f.stderr < 1e-12);
    }

    #[test]
    fn line_fit_stderr_matches_closed_form() {
        // residuals ±δ alternating on symmetric x: ss = nδ², sxx known
        let x = [-2.0, -1.0, 1.0, 2.0];
        let d = 0.1;
        let y = [d, -d, -d, d];
        let f = fit_line(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 0.0, epsilon = 1e-15);
        assert_relative_eq!(f.rms, d, epsilon = 1e-15);
        assert_relative_eq!(
            f.stderr,
            (4.0 * d * d / 2.0 / 10.0f64).sqrt(),
            epsilon = 1e-15
        );
    }

    fn synthetic(k: usize, n: usize, t: &[f64], offset: f64) -> InterfaceTrack {
        let mut track = InterfaceTrack::new(k);
        let e = expected_slopes(k);
        for &s in t {
            let base = (-2.0 * (n as f64 - 1.0) * s).sqrt();
            let r = e
                .iter()
                .map(|m| base + m * asymptotic_profile(s) + offset * m)
                .collect();
            track.push(s, r).unwrap();
        }
        track
    }

    fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| -(10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64)))
            .collect()
    }

    #[test]
    fn asymptotic_fit_recovers_slopes() {
        let t = log_times(2.0, 5.0, 200);
        let fit = fit_asymptotics(&synthetic(3, 3, &t, 0.7), 3).unwrap();
        for (l, e) in fit.layers.iter().zip(&fit.expected_slopes) {
            assert!((l.slope - e).abs() < 1e-10);
        }
        assert!(fit.max_absolute_slope_error() < 1e-10);
        assert_relative_eq!(fit.decades, 2.7, epsilon = 1e-9);
        assert_relative_eq!(fit.window.0, -1e5, max_relative = 1e-12);
    }

    #[test]
    fn short_window_is_rejected() {
        let t = log_times(2.0, 3.5, 100);
        match fit_asymptotics(&synthetic(2, 2, &t, 0.0), 2) {
            Err(Error::WindowTooShort { decades, required }) => {
                assert!(decades < required);
                assert_relative_eq!(decades, 1.35, epsilon = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sphere_fit_exact_and_drift() {
        let t: Vec<f64> = (0..100).map(|i| -50.0 + i as f64 * 0.4).collect();
        let r: Vec<f64> = t.iter().map(|s| (-4.0 * s + 3.0).sqrt()).collect();
        let f = fit_sphere(&t, &r, 3).unwrap();
        assert_relative_eq!(f.c, 3.0, epsilon = 1e-12);
        assert!(f.drift() < 1e-12 && f.max_deviation < 1e-12);
        // a c that changes linearly in t drifts by the half-window mean difference
        let r: Vec<f64> = t
            .iter()
            .map(|s| (-4.0 * s + 3.0 + 0.01 * s).sqrt())
            .collect();
        let f = fit_sphere(&t, &r, 3).unwrap();
        assert_relative_eq!(f.drift(), 0.01 * 20.0, epsilon = 1e-10);
    }
}
