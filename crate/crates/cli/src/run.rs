//! One function per experiment. Each writes its CSV files into the sink and
//! returns a short JSON summary for the manifest.

use anyhow::{bail, Result};
use gaugewalk::operators::rectangle_loop;
use gaugewalk::single_photon::{single_realization, RunSettings};
use gaugewalk::*;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::output::{num, opt, Csv, Sink};

pub fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    match cfg.experiment {
        Experiment::StepCheck => step_check(cfg, sink),
        Experiment::Evolve => evolve_single(cfg, sink),
        Experiment::Transport => transport(cfg, sink),
        Experiment::Ensemble => ensemble(cfg, sink),
        Experiment::TwoPhoton => two_photon(cfg, sink),
        Experiment::Spectrum => spectrum(cfg, sink),
        Experiment::Nonabelian => nonabelian(cfg, sink),
    }
}

fn disorder_cfg(cfg: &RunConfig) -> DisorderConfig {
    DisorderConfig { delta: cfg.delta, seed: cfg.seed }
}

fn absorber(cfg: &RunConfig) -> AbsorberModel {
    AbsorberModel { variant: cfg.absorber, target: cfg.target }
}

const SERIES_HEADER: [&str; 6] = ["step", "variance", "var_x", "var_y", "eta_cum", "edge_prob"];

fn write_series(sink: &mut Sink, name: &str, s: &ObservableSeries64) -> Result<()> {
    let mut csv = Csv::new(&SERIES_HEADER);
    for r in &s.records {
        csv.row(&[r.step.to_string(), opt(r.variance), opt(r.var_x), opt(r.var_y), num(r.eta_cum), opt(r.edge_prob)]);
    }
    sink.csv(name, &csv)
}

fn write_snapshots(sink: &mut Sink, s: &ObservableSeries64) -> Result<()> {
    for snap in &s.snapshots {
        let mut csv = Csv::new(&["x", "y", "probability"]);
        for (i, p) in snap.probabilities.iter().enumerate() {
            let c = site_coord(i, s.m);
            csv.row(&[c.x.to_string(), c.y.to_string(), num(*p)]);
        }
        sink.csv(&format!("snapshots/step_{:05}.csv", snap.step), &csv)?;
    }
    Ok(())
}

fn step_check(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let mut csv = Csv::new(&["phi", "blocks", "unitarity_deviation", "max_holonomy_error"]);
    let rows: Vec<Result<(f64, usize, f64, f64)>> = cfg
        .phi_grid
        .par_iter()
        .map(|&phi| {
            let spec = LatticeSpec64::new(cfg.m, phi)?;
            let d = sample_disorder(&spec, disorder_cfg(cfg))?;
            let op = build_step(&spec, Some(&d))?;
            let blocks: usize = op.layers().iter().map(|l| l.blocks.len()).sum();
            let dev = unitarity_deviation(&op.dense_matrix()?);
            let mut hol = 0.0f64;
            for x in 1..cfg.m {
                for y in 1..cfg.m {
                    let h = plaquette_holonomy(&spec, &rectangle_loop(SiteCoord { x, y }, 1, 1))?;
                    hol = hol.max((h - C64::from_polar(1.0, spec.flux())).norm());
                }
            }
            Ok((phi, blocks, dev, hol))
        })
        .collect();
    let mut worst = 0.0f64;
    for r in rows {
        let (phi, blocks, dev, hol) = r?;
        worst = worst.max(dev);
        csv.row(&[num(phi), blocks.to_string(), num(dev), num(hol)]);
    }
    sink.csv("step_check.csv", &csv)?;
    if cfg.save_disorder {
        let d = sample_disorder(&LatticeSpec64::new(cfg.m, cfg.phi)?, disorder_cfg(cfg))?;
        sink.json("disorder.json", &d)?;
    }
    Ok(json!({ "max_unitarity_deviation": worst }))
}

fn evolve_single(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let spec = LatticeSpec64::new(cfg.m, cfg.phi)?;
    let d = (cfg.delta > 0.0).then(|| sample_disorder(&spec, disorder_cfg(cfg))).transpose()?;
    let op = build_step(&spec, d.as_ref())?;
    let psi = PhotonState64::localized(&spec, cfg.start, Mode::Abelian)?;
    let s = evolve(&psi, &op, cfg.steps, absorber(cfg), cfg.snapshot_stride)?;
    write_series(sink, "series.csv", &s)?;
    write_snapshots(sink, &s)?;
    if let Some(d) = &d {
        sink.json("disorder.json", d)?;
    }
    Ok(json!({ "final_norm_sqr": s.final_norm_sqr() }))
}

fn check_absorbing(cfg: &RunConfig) -> Result<()> {
    if cfg.absorber == Absorber::None {
        bail!("{} needs an absorber (projector or exponential)", cfg.experiment.name());
    }
    Ok(())
}

fn save_members(cfg: &RunConfig, spec: &LatticeSpec64, sink: &mut Sink) -> Result<()> {
    if cfg.save_disorder {
        let base = disorder_cfg(cfg);
        for r in 0..cfg.realizations {
            let d = sample_disorder(spec, base.member(r as u64))?;
            sink.json(&format!("disorder/realization_{r:05}.json"), &d)?;
        }
    }
    Ok(())
}

fn transport(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    check_absorbing(cfg)?;
    let run = RunSettings { steps: cfg.steps, start: cfg.start, absorber: absorber(cfg) };
    let mut csv = Csv::new(&["phi", "step", "eta_mean", "eta_stderr", "remaining_mean", "remaining_stderr"]);
    let mut finals = Vec::new();
    for &phi in &cfg.phi_grid {
        let spec = LatticeSpec64::new(cfg.m, phi)?;
        let e = ensemble_run(&spec, disorder_cfg(cfg), run, cfg.realizations)?;
        for r in &e.records {
            csv.row(&[
                num(phi),
                r.step.to_string(),
                num(r.eta_cum.mean),
                num(r.eta_cum.stderr),
                num(r.norm_sqr.mean),
                num(r.norm_sqr.stderr),
            ]);
        }
        let last = e.records.last().expect("steps >= 1");
        finals.push(json!({ "phi": phi, "eta": last.eta_cum.mean, "remaining": last.norm_sqr.mean }));
    }
    sink.csv("eta_vs_step.csv", &csv)?;
    save_members(cfg, &LatticeSpec64::new(cfg.m, cfg.phi)?, sink)?;
    Ok(json!({ "final": finals }))
}

fn ensemble(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let spec = LatticeSpec64::new(cfg.m, cfg.phi)?;
    let run = RunSettings { steps: cfg.steps, start: cfg.start, absorber: absorber(cfg) };
    let e = ensemble_run(&spec, disorder_cfg(cfg), run, cfg.realizations)?;
    let mut csv = Csv::new(&[
        "step",
        "variance_mean",
        "variance_stderr",
        "eta_mean",
        "eta_stderr",
        "remaining_mean",
        "remaining_stderr",
        "edge_prob_mean",
        "edge_prob_stderr",
    ]);
    for r in &e.records {
        csv.row(&[
            r.step.to_string(),
            opt(r.variance.map(|v| v.mean)),
            opt(r.variance.map(|v| v.stderr)),
            num(r.eta_cum.mean),
            num(r.eta_cum.stderr),
            num(r.norm_sqr.mean),
            num(r.norm_sqr.stderr),
            opt(r.edge_prob.map(|v| v.mean)),
            opt(r.edge_prob.map(|v| v.stderr)),
        ]);
    }
    sink.csv("ensemble.csv", &csv)?;
    // the first member is also written out as a plain series for comparison
    let first = single_realization(&spec, disorder_cfg(cfg).member(0), &run)?;
    write_series(sink, "series_r00000.csv", &first)?;
    save_members(cfg, &spec, sink)?;
    let last = e.records.last().expect("steps >= 1");
    Ok(json!({ "eta": last.eta_cum.mean, "remaining": last.norm_sqr.mean }))
}

fn two_photon(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let mut csv = Csv::new(&["phi", "symmetry", "mean_distance", "both_edge_prob"]);
    for (k, &phi) in cfg.phi_grid.iter().enumerate() {
        let spec = LatticeSpec64::new(cfg.m, phi)?;
        let op = build_step(&spec, None)?;
        for &sym in &cfg.symmetries {
            let st = evolve_pair(&init_pair(&spec, cfg.start, cfg.partner, sym)?, &op, cfg.steps)?;
            csv.row(&[
                num(phi),
                sym.name().to_string(),
                num(mean_distance(&st, cfg.metric)?),
                num(both_edge_probability(&st)?),
            ]);
            if cfg.correlations {
                let c = correlation_matrix(&st)?;
                let mut triples = Csv::new(&["i1", "i2", "value"]);
                for (i1, i2, v) in c.entries(cfg.correlation_threshold) {
                    triples.row(&[i1.to_string(), i2.to_string(), num(v)]);
                }
                sink.csv(&format!("correlations/{}_{k:04}.csv", sym.name()), &triples)?;
            }
        }
    }
    sink.csv("two_photon_sweep.csv", &csv)?;
    Ok(json!({ "points": cfg.phi_grid.len() }))
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let spectra = butterfly_sweep(cfg.m, &cfg.phi_grid)?;
    let mut csv = Csv::new(&["phi", "energy"]);
    for s in &spectra {
        for e in &s.energies {
            csv.row(&[num(s.phi), num(*e)]);
        }
    }
    sink.csv("butterfly.csv", &csv)?;
    Ok(json!({ "points": spectra.len(), "levels_per_point": cfg.m * cfg.m }))
}

fn nonabelian(cfg: &RunConfig, sink: &mut Sink) -> Result<Value> {
    let spec = LatticeSpec64::with_rashba(cfg.m, cfg.alpha)?;
    let op = build_step_nonabelian(&spec)?;
    let worst = op
        .layers()
        .iter()
        .flat_map(|l| l.blocks.iter())
        .map(|b| b.matrix.unitarity_deviation())
        .fold(0.0, f64::max);
    let w = wilson_loop(cfg.alpha);
    let mut wl = Csv::new(&["alpha", "trace_re", "trace_im", "max_block_deviation"]);
    wl.row(&[num(cfg.alpha), num(w.trace().re), num(w.trace().im), num(worst)]);
    sink.csv("wilson_loop.csv", &wl)?;
    let psi = PhotonState64::localized(&spec, cfg.start, Mode::NonAbelian)?;
    let s = evolve(&psi, &op, cfg.steps, absorber(cfg), cfg.snapshot_stride)?;
    write_series(sink, "series.csv", &s)?;
    write_snapshots(sink, &s)?;
    Ok(json!({ "wilson_trace": [w.trace().re, w.trace().im], "max_block_deviation": worst }))
}
