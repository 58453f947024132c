//! Dormand–Prince 5(4) integrator with PI step-size control.
//!
//! Integration may run in either direction. Steps are clipped so that every
//! requested stop point is hit exactly; the observer sees each accepted step.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Error coefficients: 5th-order weights minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step magnitude.
    pub max_step: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Options {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 1_000_000,
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

/// Counters gathered during a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn weighted_rms(err: &[f64], y0: &[f64], y1: &[f64], opts: &Options) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `y' = rhs(x, y)` from `x0` to `x_end`.
///
/// `stops` are points (between `x0` and `x_end`) the integrator must land on.
/// `observer(x, y, dy)` is called for the initial point and after every
/// accepted step; returning an error aborts the solve.
pub fn solve<F, O>(
    mut rhs: F,
    x0: f64,
    y0: &[f64],
    x_end: f64,
    stops: &[f64],
    opts: &Options,
    mut observer: O,
) -> Result<Stats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64], &[f64]) -> Result<()>,
{
    let dim = y0.len();
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&s| (s - x0) * dir > 0.0 && (x_end - s) * dir > 0.0)
        .collect();
    targets.sort_by(|a, b| (a * dir).partial_cmp(&(b * dir)).unwrap());
    targets.push(x_end);
    let mut next_target = 0;

    let mut stats = Stats::default();
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    rhs(x, &y, &mut k1);
    stats.evaluations += 1;
    observer(x, &y, &k1)?;
    if x_end == x0 {
        return Ok(stats);
    }

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];

    let span = (x_end - x0).abs();
    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let d0 = weighted_rms(&y, &y, &y, opts);
            let d1 = weighted_rms(&k1, &y, &y, opts);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6 * span
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(opts.max_step)
    .min(span);

    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * BETA;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepFailure { x, h });
        }
        let target = targets[next_target];
        let remaining = (target - x).abs();
        let mut landing = false;
        let h_natural = h;
        if h >= remaining {
            h = remaining;
            landing = true;
        }
        if h <= 1e-14 * x.abs().max(1.0) {
            return Err(Error::StepFailure { x, h });
        }
        let hs = dir * h;

        for i in 0..dim {
            tmp[i] = y[i] + hs * A21 * k1[i];
        }
        rhs(x + C2 * hs, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(x + C3 * hs, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(x + C4 * hs, &tmp, &mut k4);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(x + C5 * hs, &tmp, &mut k5);
        for i in 0..dim {
            tmp[i] =
                y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(x + hs, &tmp, &mut k6);
        for i in 0..dim {
            y_new[i] =
                y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let x_new = if landing { target } else { x + hs };
        rhs(x_new, &y_new, &mut k7);
        stats.evaluations += 6;
        for i in 0..dim {
            err[i] =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = weighted_rms(&err, &y, &y_new, opts);
        let finite = en.is_finite() && y_new.iter().all(|v| v.is_finite());

        if finite && en <= 1.0 {
            stats.accepted += 1;
            x = x_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            observer(x, &y, &k1)?;
            if landing {
                next_target += 1;
                if next_target == targets.len() {
                    return Ok(stats);
                }
            }
            let en = en.max(1e-10);
            let mut fac = SAFETY * en.powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = en;
            last_rejected = false;
            // a step clipped to land on a stop says little about the natural size
            h = if landing {
                h_natural.max(h * fac.min(1.0))
            } else {
                h * fac
            };
            h = h.min(opts.max_step);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = if finite {
                (SAFETY * en.powf(-ALPHA)).clamp(FAC_MIN, 1.0)
            } else {
                0.25
            };
            h *= fac;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let mut last = (0.0, 0.0);
        let opts = Options::new(1e-10, 1e-12);
        solve(
            |_, y, dy| dy[0] = y[0],
            0.0,
            &[1.0],
            2.0,
            &[],
            &opts,
            |x, y, _| {
                last = (x, y[0]);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(last.0, 2.0);
        assert!((last.1 - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn backward_harmonic_oscillator_hits_stops() {
        let opts = Options::new(1e-11, 1e-12);
        let stops = [-0.5, -1.0, -2.5];
        let mut seen = Vec::new();
        solve(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            -3.0,
            &stops,
            &opts,
            |x, y, _| {
                if stops.contains(&x) || x == -3.0 {
                    seen.push((x, y[0]));
                }
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
        for (x, y) in seen {
            assert!((y - x.sin()).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn observer_error_aborts() {
        let opts = Options::new(1e-8, 1e-8);
        let r = solve(
            |_, _, dy| dy[0] = 1.0,
            0.0,
            &[0.0],
            10.0,
            &[],
            &opts,
            |x, _, _| {
                if x > 1.0 {
                    Err(Error::Domain("stop".into()))
                } else {
                    Ok(())
                }
            },
        );
        assert!(r.is_err());
    }

    #[test]
    fn blow_up_reports_step_failure() {
        // y' = y², y(0) = 1 blows up at x = 1
        let opts = Options::new(1e-8, 1e-8);
        let r = solve(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &[],
            &opts,
            |_, _, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }
}
