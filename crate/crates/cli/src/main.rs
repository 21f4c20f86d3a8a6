use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gaugewalk_cli::{execute, parse_config, Experiment};

#[derive(Parser)]
#[command(name = "gaugewalk", version, about = "Quantum walks on beam-splitter lattices with synthetic gauge fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check unitarity and plaquette holonomy of the step operator
    StepCheck(Args),
    /// Evolve a single photon and record per-step observables
    Evolve(Args),
    /// Disorder-averaged transport efficiency over a flux grid
    Transport(Args),
    /// Disorder-averaged observables at one flux
    Ensemble(Args),
    /// Two-photon distance and edge probability over a flux grid
    TwoPhoton(Args),
    /// Quasienergy spectra over a flux grid
    Spectrum(Args),
    /// Polarization-dependent (Rashba) walk and Wilson loop
    Nonabelian(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides `seed` in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::StepCheck(a) => (Experiment::StepCheck, a),
        Command::Evolve(a) => (Experiment::Evolve, a),
        Command::Transport(a) => (Experiment::Transport, a),
        Command::Ensemble(a) => (Experiment::Ensemble, a),
        Command::TwoPhoton(a) => (Experiment::TwoPhoton, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::Nonabelian(a) => (Experiment::Nonabelian, a),
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = parse_config(&text, experiment, args.seed)
        .with_context(|| format!("in {}", args.config.display()))?;
    let files = execute(&cfg, &args.out)?;
    for f in files {
        println!("{}", args.out.join(f).display());
    }
    Ok(())
}
