use std::fs;
use std::path::Path;
use std::process::Command;

use gaugewalk_cli::{execute, parse_config, ConfigError, Experiment};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaugewalk"))
}

fn invalid_message(r: Result<gaugewalk_cli::RunConfig, ConfigError>) -> String {
    match r {
        Err(ConfigError::Invalid(m)) => m,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_evolve_config_accepted() {
    let cfg = parse_config("m = 30\nphi = 0.0\nsteps = 20\n", Experiment::Evolve, None).unwrap();
    assert_eq!(cfg.m, 30);
    assert_eq!(cfg.steps, 20);
    assert_eq!((cfg.start.x, cfg.start.y), (15, 15));
    assert_eq!(cfg.seed, 0);
}

#[test]
fn odd_lattice_rejected() {
    let msg = invalid_message(parse_config("m = 31\n", Experiment::Evolve, None));
    assert!(msg.contains("M must be even"), "{msg}");
}

#[test]
fn target_outside_lattice_rejected() {
    let msg = invalid_message(parse_config("m = 60\ntarget = [61, 61]\n", Experiment::Transport, None));
    assert!(msg.contains("target") && msg.contains("outside"), "{msg}");
}

#[test]
fn unknown_key_rejected_with_its_name() {
    match parse_config("m = 10\nsteps = 5\nstpes = 6\n", Experiment::Evolve, None) {
        Err(ConfigError::Parse(e)) => assert!(e.to_string().contains("stpes"), "{e}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invariant_violations_named() {
    for (text, exp, needle) in [
        ("m = 10\nrealizations = 0\n", Experiment::Ensemble, "realizations"),
        ("m = 10\nphi_grid = []\n", Experiment::TwoPhoton, "phi_grid"),
        ("m = 10\nsteps = 0\n", Experiment::Evolve, "steps"),
        ("m = 10\ndelta = -0.1\n", Experiment::Evolve, "delta"),
        ("m = 10\nstart = [1, 1]\npartner = [1, 1]\n", Experiment::TwoPhoton, "fermions"),
        ("m = 66\n", Experiment::Spectrum, "at most 64"),
    ] {
        let msg = invalid_message(parse_config(text, exp, None));
        assert!(msg.contains(needle), "{text:?}: {msg}");
    }
}

#[test]
fn command_line_seed_wins() {
    let cfg = parse_config("m = 4\nseed = 3\n", Experiment::Ensemble, Some(9)).unwrap();
    assert_eq!(cfg.seed, 9);
    let cfg = parse_config("m = 4\nseed = 3\n", Experiment::Ensemble, None).unwrap();
    assert_eq!(cfg.seed, 3);
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn series_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("m = 10\nphi = 0.6\nsteps = 7\nsnapshot_stride = 3\ndelta = 0.1\nabsorber = \"projector\"\n", Experiment::Evolve, Some(5)).unwrap();
    execute(&cfg, dir.path()).unwrap();
    let series = read(dir.path(), "series.csv");
    let mut lines = series.lines();
    assert_eq!(lines.next().unwrap(), "step,variance,var_x,var_y,eta_cum,edge_prob");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "1");
    // 17 significant digits: d.dddddddddddddddde±x
    let mantissa = first[1].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{}", first[1]);

    for step in [3, 6, 7] {
        let grid = read(dir.path(), &format!("snapshots/step_{step:05}.csv"));
        assert!(grid.starts_with("x,y,probability\n"));
        assert_eq!(grid.lines().count(), 101);
    }
    let d: gaugewalk::DisorderRealization64 = serde_json::from_str(&read(dir.path(), "disorder.json")).unwrap();
    let d = d.reindex().unwrap();
    assert_eq!(d.config.seed, 5);
    assert_eq!(d.m, 10);

    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    for key in ["config", "seed", "version", "absorber", "metric", "rng", "wall_time_s"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["absorber"]["variant"], "projector");
}

#[test]
fn two_photon_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("m = 6\nsteps = 3\nphi_grid = [0.0, 0.6]\ncorrelations = true\n", Experiment::TwoPhoton, None)
        .unwrap();
    execute(&cfg, dir.path()).unwrap();
    let sweep = read(dir.path(), "two_photon_sweep.csv");
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "phi,symmetry,mean_distance,both_edge_prob");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].contains(",bosonic,") && lines[2].contains(",fermionic,"));

    let triples = read(dir.path(), "correlations/bosonic_0001.csv");
    assert!(triples.starts_with("i1,i2,value\n"));
    let total: f64 = triples.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn spectrum_outputs_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("m = 4\nphi_points = 5\n", Experiment::Spectrum, None).unwrap();
    execute(&cfg, dir.path()).unwrap();
    let b = read(dir.path(), "butterfly.csv");
    assert!(b.starts_with("phi,energy\n"));
    assert_eq!(b.lines().count(), 1 + 5 * 16);
    let last_phi: f64 = b.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_phi, std::f64::consts::TAU);
}

fn run_cli(sub: &str, config: &Path, out: &Path, threads: usize) {
    let status = bin()
        .args([sub, "--config"])
        .arg(config)
        .args(["--seed", "2016", "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

#[test]
fn identical_inputs_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "m = 12\nphi_grid = [0.0, 0.6283185307179586]\nsteps = 30\ndelta = 0.1\nrealizations = 6\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_cli("transport", &config, &a, 1);
    run_cli("transport", &config, &b, 3);
    let (x, y) = (read(&a, "eta_vs_step.csv"), read(&b, "eta_vs_step.csv"));
    assert_eq!(x.lines().next().unwrap(), "phi,step,eta_mean,eta_stderr,remaining_mean,remaining_stderr");
    assert_eq!(x.lines().count(), 1 + 2 * 30);
    assert_eq!(x, y);
    assert!(a.join("manifest.json").exists());
}

#[test]
fn ensemble_and_nonabelian_run_from_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("e.toml");
    fs::write(&config, "m = 8\nsteps = 10\ndelta = 0.2\nrealizations = 3\nsave_disorder = true\n").unwrap();
    run_cli("ensemble", &config, &dir.path().join("e"), 2);
    let e = read(&dir.path().join("e"), "ensemble.csv");
    assert_eq!(e.lines().count(), 11);
    assert!(dir.path().join("e/disorder/realization_00002.json").exists());

    let config = dir.path().join("n.toml");
    fs::write(&config, "m = 6\nalpha = 0.7853981633974483\nsteps = 5\n").unwrap();
    run_cli("nonabelian", &config, &dir.path().join("n"), 1);
    let w = read(&dir.path().join("n"), "wilson_loop.csv");
    assert!(w.starts_with("alpha,trace_re,trace_im,max_block_deviation\n"));
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "m = 31\n").unwrap();
    let out = bin().args(["evolve", "--config"]).arg(&config).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("M must be even"));
}

#[test]
fn step_check_reports_unitary_operator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("m = 6\nphi_grid = [0.0, 1.0]\ndelta = 0.2\n", Experiment::StepCheck, None).unwrap();
    execute(&cfg, dir.path()).unwrap();
    let c = read(dir.path(), "step_check.csv");
    for line in c.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], "60");
        assert!(f[2].parse::<f64>().unwrap() < 1e-10);
        assert!(f[3].parse::<f64>().unwrap() < 1e-12);
    }
}
