//! `aclab`: runs named scenarios from TOML configs into self-describing run
//! directories, compares reports, and extracts plot columns.

mod compare;
mod config;
mod output;
mod plot;
mod scenarios;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aclab::report::{write_table, RunReport};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::compare::{compare_reports, Tolerance};
use crate::config::ExperimentConfig;

/// Exit status for invalid configurations and incomparable reports.
const EXIT_INVALID: u8 = 2;
/// Differences printed before the rest are summarized.
const SHOWN_DIFFERENCES: usize = 40;

#[derive(Parser)]
#[command(
    name = "aclab",
    version,
    about = "Radial Allen-Cahn multi-layer experiments"
)]
struct Cli {
    /// Print the defaults of every scenario as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every config, then run each into its output directory.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Worker threads; each config runs on one of them.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
    /// Compare two reports field by field; exit 0 iff all fields agree.
    Compare {
        /// Report file or run directory.
        a: PathBuf,
        b: PathBuf,
        /// Absolute tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Relative tolerance, added to the absolute one.
        #[arg(long, default_value_t = 0.0)]
        rel_tol: f64,
        /// Only compare fields under this path, e.g. `tracks.pde.radii`; repeatable.
        #[arg(long)]
        field: Vec<String>,
    },
    /// Write plot columns for a report as CSV.
    PlotData {
        /// Report file or run directory.
        report: PathBuf,
        /// Destination; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", config::print_defaults());
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Run { configs, jobs }) => run(&configs, jobs.into()),
        Some(Command::Compare {
            a,
            b,
            tol,
            rel_tol,
            field,
        }) => compare(
            &a,
            &b,
            Tolerance {
                abs: tol,
                rel: rel_tol,
            },
            &field,
        ),
        Some(Command::PlotData { report, output }) => {
            plot_data(&report, output.as_deref()).map(|()| ExitCode::SUCCESS)
        }
        None => {
            eprintln!("nothing to do; see `aclab --help`");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let dir = base.join(&cfg.output);
    Ok((cfg, dir))
}

fn run(paths: &[PathBuf], jobs: usize) -> Result<ExitCode> {
    let mut loaded = Vec::new();
    let mut problems = Vec::new();
    for p in paths {
        match load_config(p) {
            Ok(c) => loaded.push((p, c)),
            Err(e) => problems.push(e),
        }
    }
    let mut seen = BTreeSet::new();
    for (p, (_, dir)) in &loaded {
        if !seen.insert(dir.clone()) {
            problems.push(format!(
                "{}: output directory {} is used by another config",
                p.display(),
                dir.display()
            ));
        }
    }
    if !problems.is_empty() {
        for e in problems {
            eprintln!("{e}");
        }
        return Ok(ExitCode::from(EXIT_INVALID));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        loaded
            .par_iter()
            .map(|(p, (cfg, dir))| {
                let start = Instant::now();
                let outputs = scenarios::execute(cfg).with_context(|| {
                    format!("{}: {} scenario", p.display(), cfg.scenario.name())
                })?;
                output::write_run(dir, cfg, &outputs, start.elapsed())?;
                Ok(dir.clone())
            })
            .collect()
    });
    let mut failed = false;
    for r in results {
        match r {
            Ok(dir) => println!("wrote {}", dir.display()),
            Err(e) => {
                failed = true;
                eprintln!("error: {e:#}");
            }
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(output::REPORT)
    } else {
        p.to_path_buf()
    }
}

fn read_json(p: &Path) -> Result<serde_json::Value> {
    let path = report_path(p);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn compare(a: &Path, b: &Path, tol: Tolerance, fields: &[String]) -> Result<ExitCode> {
    if !(tol.abs >= 0.0 && tol.rel >= 0.0) {
        bail!("tolerances must be nonnegative");
    }
    let (va, vb) = (read_json(a)?, read_json(b)?);
    let diffs = match compare_reports(&va, &vb, tol, fields) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(EXIT_INVALID));
        }
    };
    let mut stdout = io::stdout().lock();
    for d in diffs.iter().take(SHOWN_DIFFERENCES) {
        writeln!(stdout, "{d}")?;
    }
    if diffs.len() > SHOWN_DIFFERENCES {
        writeln!(stdout, "... and {} more", diffs.len() - SHOWN_DIFFERENCES)?;
    }
    if diffs.is_empty() {
        writeln!(stdout, "reports agree within tolerance")?;
        Ok(ExitCode::SUCCESS)
    } else {
        writeln!(stdout, "{} field(s) differ", diffs.len())?;
        Ok(ExitCode::FAILURE)
    }
}

fn plot_data(report: &Path, out: Option<&Path>) -> Result<()> {
    let parsed: RunReport = serde_json::from_value(read_json(report)?).context("report layout")?;
    let (header, rows) = plot::plot_columns(&parsed)?;
    match out {
        Some(p) => {
            let mut buf = Vec::new();
            write_table(&mut buf, &header, &rows)?;
            fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?;
        }
        None => write_table(io::stdout().lock(), &header, &rows)?,
    }
    Ok(())
}
