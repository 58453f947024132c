//! Run directory layout: `manifest.json`, `report.json`, scenario CSV/JSON
//! files, and `timing.json`. Everything except `timing.json` is a pure
//! function of the configuration and the build.

use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::scenarios::Outputs;

pub const REPORT: &str = "report.json";
pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

/// Pretty JSON with sorted keys and a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    // `Value` objects are ordered maps, so the round trip sorts every key
    let value = serde_json::to_value(value)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    outputs: &Outputs,
    wall: Duration,
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, bytes: &[u8]| {
        fs::write(dir.join(name), bytes)
            .with_context(|| format!("writing {}", dir.join(name).display()))
    };
    let mut files: Vec<&str> = outputs.files.keys().map(String::as_str).collect();
    files.push(REPORT);
    files.sort_unstable();
    let manifest = json!({
        "config": cfg,
        "outputs": files,
        "package": env!("CARGO_PKG_NAME"),
        "scenario": cfg.scenario.name(),
        "timing": TIMING,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write(MANIFEST, &json_bytes(&manifest)?)?;
    write(REPORT, &json_bytes(&outputs.report)?)?;
    for (name, bytes) in &outputs.files {
        write(name, bytes)?;
    }
    write(
        TIMING,
        &json_bytes(&json!({ "wall_seconds": wall.as_secs_f64() }))?,
    )?;
    Ok(())
}
