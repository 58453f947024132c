//! Scenario drivers. Each returns the report plus its file companions; nothing
//! here touches the file system or the clock.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::sync::Arc;

use aclab::analysis::{
    compare_tracks, curvature_residual, fit_asymptotics, fit_sphere, project_residual,
    InterfaceTrack,
};
use aclab::ansatz::{evaluate_z, weighted_norm, MultiLayerAnsatz, WeightFunction, WeightVariant};
use aclab::pde::{
    evolve, far_field_value, field_discrepancy, rescale_check, EvolveOptions, Geometry,
    OuterBoundary, RadialField, RadialGrid, SolverConfig,
};
use aclab::profile::{compute_beta, heteroclinic, shrinking_sphere};
use aclab::report::{write_table, write_track_csv, NormSeries, ProjectionRecord, RunReport};
use aclab::toda::{
    asymptotic_profile, contraction_threshold, envelope_fit, eta_upper_bound, first_approximation,
    integrate_toda, solve_eta, toda_constants, EtaSolution, LayerState, PicardOptions,
    TodaConstants, TodaOptions,
};
use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Scenario};

/// Samples per decade of `|t|` on logarithmic time grids.
const SAMPLES_PER_DECADE: f64 = 50.0;

pub struct Outputs {
    pub report: RunReport,
    /// File name to contents, written next to the report.
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Outputs {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            report: RunReport::new(cfg.scenario.name(), cfg.k, cfg.n),
            files: BTreeMap::new(),
        }
    }

    fn table(&mut self, name: &str, header: Vec<String>, rows: &[Vec<f64>]) {
        let mut buf = Vec::new();
        write_table(&mut buf, &header, rows).expect("writing to memory");
        self.files.insert(name.to_string(), buf);
    }

    fn track(&mut self, name: &str, track: &InterfaceTrack) {
        let mut buf = Vec::new();
        write_track_csv(&mut buf, track).expect("writing to memory");
        self.files.insert(format!("{name}.csv"), buf);
        self.report.tracks.insert(name.to_string(), track.clone());
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::new(cfg);
    match cfg.scenario {
        Scenario::Constants => constants(cfg, &mut out)?,
        Scenario::Eta => eta(cfg, &mut out)?,
        Scenario::Toda => toda(cfg, &mut out)?,
        Scenario::Picard => picard(cfg, &mut out)?,
        Scenario::Pde => field_run(cfg, &mut out)?,
        Scenario::End2end => {
            field_run(cfg, &mut out)?;
            let fit = match (&out.report.fit, out.report.notes.get("fit")) {
                (Some(f), _) => serde_json::to_value(f)?,
                (None, e) => serde_json::json!({ "error": e }),
            };
            out.files
                .insert("fit.json".into(), crate::output::json_bytes(&fit)?);
        }
        Scenario::Rescale => rescale(cfg, &mut out)?,
    }
    Ok(out)
}

/// `|t|` from `|t_near|` to `|t_far|`, logarithmically spaced, as negative times.
pub fn log_times(t_near: f64, t_far: f64) -> Vec<f64> {
    let (a, b) = (t_near.abs().log10(), t_far.abs().log10());
    let count = ((b - a) * SAMPLES_PER_DECADE).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=count)
        .map(|i| -(10f64.powf(a + (b - a) * i as f64 / count as f64)))
        .collect();
    // endpoints exact so horizons are never overrun by rounding
    times[0] = t_near;
    times[count] = t_far;
    times
}

fn interaction(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(f64, TodaConstants)> {
    let beta = compute_beta(cfg.tolerances.beta_quadrature)?.beta;
    out.report.scalar("beta", beta);
    let c = toda_constants(cfg.k, beta)?;
    if c.is_experimental() {
        out.report.note(
            "parity",
            "odd layer count beyond one: far field is +1, outside the even-parity setting",
        );
    }
    Ok((beta, c))
}

fn separation(cfg: &ExperimentConfig) -> Result<EtaSolution> {
    solve_eta(-cfg.t_start, cfg.tolerances.eta).context("separation solve")
}

fn constants(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let c = compute_beta(cfg.tolerances.beta_quadrature)?;
    let closed = 12.0 * SQRT_2;
    let r = &mut out.report;
    r.scalar("beta", c.beta);
    r.scalar("beta_closed_form", closed);
    r.scalar("beta_relative_error", (c.beta / closed - 1.0).abs());
    r.scalar("i_kinetic", c.i_kinetic);
    r.scalar("i_tail", c.i_tail);
    let t = toda_constants(cfg.k, c.beta)?;
    r.vector("b", t.b);
    r.vector("gamma", t.gamma);
    Ok(())
}

fn eta(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let eta = separation(cfg)?;
    let times = log_times(cfg.t_stop, cfg.t_start);
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            vec![
                t,
                eta.value(t),
                asymptotic_profile(t),
                eta_upper_bound(t),
                eta.residual(t),
            ]
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let r = &mut out.report;
    r.scalar(
        "min_eta",
        values.iter().copied().fold(f64::INFINITY, f64::min),
    );
    r.scalar(
        "max_asymptotic_deviation",
        times
            .iter()
            .map(|&t| eta.asymptotic_deviation(t).abs())
            .fold(0.0, f64::max),
    );
    r.scalar("max_midpoint_residual", eta.max_midpoint_tau_residual());
    r.scalar(
        "monotone",
        if values.windows(2).all(|w| w[1] > w[0]) {
            1.0
        } else {
            0.0
        },
    );
    r.scalar("nodes", eta.tau.len() as f64);
    let header = ["t", "eta", "asymptotic", "upper_bound", "residual"]
        .map(String::from)
        .to_vec();
    out.table("eta.csv", header, &rows);
    Ok(())
}

fn toda(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let (beta, c) = interaction(cfg, out)?;
    let eta = separation(cfg)?;
    let init = first_approximation(cfg.n, &c, &eta, cfg.t_stop)?;
    let times = log_times(cfg.t_stop, cfg.t_start);
    let opts = TodaOptions {
        rel_tol: cfg.tolerances.toda,
        output_times: times[1..].to_vec(),
        ..TodaOptions::default()
    };
    let traj = integrate_toda(cfg.n, beta, &init, cfg.t_start, &opts)?;
    let track = InterfaceTrack::from_toda(&traj);
    let mut theory = InterfaceTrack::new(cfg.k);
    for &t in &track.times {
        theory.push(t, first_approximation(cfg.n, &c, &eta, t)?.rho)?;
    }
    if cfg.k >= 2 {
        let mut gaps = Vec::new();
        let mut worst: f64 = 0.0;
        for s in &traj.states {
            let mut row = vec![s.t];
            for (l, g) in s.gaps().iter().enumerate() {
                let target = eta.value(s.t) + c.b[l];
                worst = worst.max((g - target).abs());
                row.extend([*g, target]);
            }
            gaps.push(row);
        }
        out.report.scalar("max_gap_deviation", worst);
        let mut header = vec!["t".to_string()];
        for l in 1..cfg.k {
            header.extend([format!("gap_{l}"), format!("eta_plus_b_{l}")]);
        }
        out.table("gaps.csv", header, &gaps);
    }
    match fit_asymptotics(&track, cfg.n) {
        Ok(f) => out.report.fit = Some(f),
        Err(e) => out.report.note("fit", e),
    }
    out.report
        .scalar("accepted_steps", traj.accepted_steps as f64);
    out.report
        .scalar("rejected_steps", traj.rejected_steps as f64);
    out.track("toda", &track);
    out.track("first_approximation", &theory);
    Ok(())
}

fn picard(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let (_, c) = interaction(cfg, out)?;
    let eta = separation(cfg)?;
    let p = &cfg.picard;
    let opts = PicardOptions {
        nodes_per_decade: p.nodes_per_decade,
        max_iters: p.max_iters,
        tol: p.tol,
        ..PicardOptions::default()
    };
    let mut candidates = p.candidates.clone();
    candidates.sort_by(f64::total_cmp);
    let result = contraction_threshold(cfg.n, &c, &eta, &candidates, -cfg.t_start, &opts)?;
    let r = &mut out.report;
    r.scalar("threshold", result.t0);
    r.scalar("iterations", result.iterations() as f64);
    r.scalar("max_ratio", result.max_ratio);
    r.vector("changes", result.changes.clone());
    match envelope_fit(&result, 1.0) {
        Ok(f) => {
            r.scalar("envelope_slope", f.slope);
            r.scalar("envelope_intercept", f.intercept);
            r.scalar("envelope_relative_rms", f.relative_rms());
        }
        Err(e) => r.note("envelope_fit", e),
    }
    let envelope = result.envelope();
    let rows: Vec<Vec<f64>> = result
        .t
        .iter()
        .zip(&result.h)
        .zip(&envelope)
        .map(|((&t, h), &e)| {
            let mut row = vec![t];
            row.extend(h);
            row.push(e);
            row
        })
        .collect();
    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.k).map(|j| format!("h_{j}")));
    header.push("envelope".into());
    out.table("picard.csv", header, &rows);
    Ok(())
}

/// Initial layers: the first approximation at `t_start`, shifted by seeded noise.
fn initial_layers(
    cfg: &ExperimentConfig,
    c: &TodaConstants,
    eta: &EtaSolution,
) -> Result<LayerState> {
    let mut layers = first_approximation(cfg.n, c, eta, cfg.t_start)?;
    let a = cfg.pde.perturbation;
    if a > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let shifted = layers
            .rho
            .iter()
            .map(|r| r + rng.random_range(-a..=a))
            .collect();
        layers = LayerState::new(cfg.t_start, shifted).context("perturbed layers")?;
    }
    Ok(layers)
}

fn field_run(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let (beta, c) = interaction(cfg, out)?;
    let eta = separation(cfg)?;
    let layers = initial_layers(cfg, &c, &eta)?;
    let ansatz = MultiLayerAnsatz::new(layers.clone())?;
    let r_max = layers.rho[cfg.k - 1] + cfg.pde.margin;
    let grid = Arc::new(RadialGrid::with_spacing(
        cfg.n,
        r_max,
        cfg.pde.h,
        Geometry::Radial,
    )?);
    let initial = RadialField::from_fn(grid.clone(), cfg.t_start, |r| evaluate_z(&ansatz, r));
    let solver = SolverConfig {
        dt: cfg.pde.dt,
        scheme: cfg.pde.scheme,
        outer: OuterBoundary::Dirichlet(far_field_value(cfg.k)),
        reaction_scale: 1.0,
    };
    let opts = EvolveOptions {
        snapshot_every: ((cfg.pde.snapshot_interval / cfg.pde.dt).round() as usize).max(1),
        ..EvolveOptions::default()
    };
    let mut track = InterfaceTrack::new(cfg.k);
    let mut norms = NormSeries::default();
    let mut projections = Vec::new();
    let (last, summary) = evolve(initial, &solver, cfg.t_stop, &opts, |f| {
        track.record(f)?;
        if track.truncated || track.times.last() != Some(&f.t) {
            return Ok(());
        }
        let rho = track.radii[track.len() - 1].clone();
        let z = MultiLayerAnsatz::new(LayerState::new(f.t, rho.clone())?)?;
        let p = project_residual(f, &z)?;
        let weights = WeightFunction::new(cfg.sigma, rho, eta.value(f.t), WeightVariant::Verbatim)?;
        let defect: Vec<f64> = f
            .grid
            .nodes
            .iter()
            .zip(&f.values)
            .map(|(&r, u)| u - evaluate_z(&z, r))
            .collect();
        norms.times.push(f.t);
        norms.sup_norm.push(f.sup_norm());
        norms.far_field.push(f.values[f.values.len() - 1]);
        norms
            .weighted_defect
            .push(weighted_norm(&defect, &f.grid.nodes, &weights));
        projections.push(ProjectionRecord {
            t: f.t,
            max_coupling: p.max_coupling(),
            coefficients: p.coefficients,
        });
        Ok(())
    })?;
    let r = &mut out.report;
    r.scalar("steps", summary.steps as f64);
    r.scalar("nodes", grid.nodes.len() as f64);
    if let Some(why) = &track.truncation {
        r.note("truncation", why);
    }
    if cfg.k == 1 && track.len() >= 4 {
        let sphere = fit_sphere(&track.times, &track.layer(0), cfg.n)?;
        let res = curvature_residual(&track, cfg.n)?;
        let order = track.time_order();
        let worst = res
            .residuals
            .iter()
            .zip(&order)
            .map(|(v, &i)| v[0].abs() * track.radii[i][0] / (cfg.n as f64 - 1.0))
            .fold(0.0, f64::max);
        r.scalar("max_relative_curvature_residual", worst);
        r.sphere_fit = Some(sphere);
    }
    match fit_asymptotics(&track, cfg.n) {
        Ok(f) => r.fit = Some(f),
        Err(e) => r.note("fit", e),
    }
    if track.len() >= 2 {
        let init = LayerState::new(track.times[0], track.radii[0].clone())?;
        let ropts = TodaOptions {
            rel_tol: cfg.tolerances.toda,
            output_times: track.times[1..].to_vec(),
            ..TodaOptions::default()
        };
        match integrate_toda(cfg.n, beta, &init, track.times[track.len() - 1], &ropts) {
            Ok(traj) => {
                let reference = InterfaceTrack::from_toda(&traj);
                match compare_tracks(&track, &reference) {
                    Ok(cmp) => r.comparison = Some(cmp),
                    Err(e) => r.note("comparison", e),
                }
                out.track("toda", &reference);
            }
            Err(e) => out.report.note("reference", e),
        }
    }
    let rows: Vec<Vec<f64>> = (0..norms.times.len())
        .map(|i| {
            vec![
                norms.times[i],
                norms.sup_norm[i],
                norms.far_field[i],
                norms.weighted_defect[i],
            ]
        })
        .collect();
    out.table(
        "norms.csv",
        ["t", "sup_norm", "far_field", "weighted_defect"]
            .map(String::from)
            .to_vec(),
        &rows,
    );
    let rows: Vec<Vec<f64>> = projections
        .iter()
        .map(|p| {
            let mut row = vec![p.t];
            row.extend(&p.coefficients);
            row.push(p.max_coupling);
            row
        })
        .collect();
    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.k).map(|j| format!("coefficient_{j}")));
    header.push("max_coupling".into());
    out.table("projections.csv", header, &rows);
    out.report.norms = Some(norms);
    out.report.projections = projections;
    out.track("pde", &track);
    let mut buf = Vec::new();
    last.write_csv(&mut buf)?;
    out.files.insert("final_field.csv".into(), buf);
    Ok(())
}

/// Single layer under the `ε`-scaled equation, from `ε² t_start` to `ε² t_stop`.
fn scaled_run(cfg: &ExperimentConfig, eps: f64, h: f64, dt: f64) -> Result<RadialField> {
    let rho = shrinking_sphere(cfg.n, cfg.t_start)?;
    let grid = Arc::new(RadialGrid::with_spacing(
        cfg.n,
        (rho + cfg.pde.margin) * eps,
        h,
        Geometry::Radial,
    )?);
    let initial = RadialField::from_fn(grid, eps * eps * cfg.t_start, |r| {
        heteroclinic(r / eps - rho)
    });
    let solver = SolverConfig {
        dt,
        scheme: cfg.pde.scheme,
        outer: OuterBoundary::Dirichlet(1.0),
        reaction_scale: 1.0 / (eps * eps),
    };
    let (last, _) = evolve(
        initial,
        &solver,
        eps * eps * cfg.t_stop,
        &EvolveOptions::default(),
        |_| Ok(()),
    )?;
    Ok(last)
}

fn rescale(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let (h, dt, eps) = (cfg.pde.h, cfg.pde.dt, cfg.rescale.epsilon);
    let base = scaled_run(cfg, 1.0, h, dt).context("base run")?;
    let refined = scaled_run(cfg, 1.0, h / 2.0, dt / 2.0).context("refined run")?;
    let scaled = scaled_run(cfg, eps, eps * h / 2.0, eps * eps * dt / 2.0).context("scaled run")?;
    let refinement = field_discrepancy(&base, &refined, 1.0)?;
    let discrepancy = rescale_check(&base, &scaled, eps)?;
    let r = &mut out.report;
    r.scalar("epsilon", eps);
    r.scalar("refinement_error", refinement);
    r.scalar("rescale_discrepancy", discrepancy);
    r.scalar("ratio", discrepancy / refinement);
    for (name, f) in [("base_field.csv", &base), ("scaled_field.csv", &scaled)] {
        let mut buf = Vec::new();
        f.write_csv(&mut buf)?;
        out.files.insert(name.into(), buf);
    }
    Ok(())
}
