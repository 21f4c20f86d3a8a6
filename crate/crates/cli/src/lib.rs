//! Command-line front end for the `gaugewalk` simulator.

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde_json::json;

pub use config::{parse_config, ConfigError, ConfigFile, Experiment, RunConfig};

/// Run an experiment and write its CSV files plus `manifest.json` into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let t0 = Instant::now();
    let mut sink = output::Sink::create(out)?;
    let summary = run::run(cfg, &mut sink)?;
    let manifest = json!({
        "experiment": cfg.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "rng": gaugewalk::SAMPLER_ID,
        "seed_derivation": "member r uses splitmix64(seed + (r + 1) * 0x9E3779B97F4A7C15)",
        "absorber": { "variant": cfg.absorber.name(), "target": [cfg.target.x, cfg.target.y] },
        "metric": cfg.metric.name(),
        "config": cfg,
        "files": sink.files,
        "summary": summary,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    sink.json("manifest.json", &manifest)?;
    Ok(sink.files)
}
