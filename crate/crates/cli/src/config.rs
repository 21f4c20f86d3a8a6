//! TOML run configuration. Unknown keys are rejected.

use std::f64::consts::TAU;

use gaugewalk::{Absorber, LatticeSpec64, Metric, SiteCoord, Symmetry};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    StepCheck,
    Evolve,
    Transport,
    Ensemble,
    TwoPhoton,
    Spectrum,
    Nonabelian,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::StepCheck => "step-check",
            Experiment::Evolve => "evolve",
            Experiment::Transport => "transport",
            Experiment::Ensemble => "ensemble",
            Experiment::TwoPhoton => "two-photon",
            Experiment::Spectrum => "spectrum",
            Experiment::Nonabelian => "nonabelian",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// The document as written. Everything but `m` is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub m: usize,
    pub phi: Option<f64>,
    pub alpha: Option<f64>,
    pub steps: Option<usize>,
    pub start: Option<[usize; 2]>,
    /// Second photon of a pair.
    pub partner: Option<[usize; 2]>,
    pub absorber: Option<Absorber>,
    pub target: Option<[usize; 2]>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub phi_grid: Option<Vec<f64>>,
    pub phi_points: Option<usize>,
    pub phi_max: Option<f64>,
    pub symmetries: Option<Vec<Symmetry>>,
    pub metric: Option<Metric>,
    pub snapshot_stride: Option<usize>,
    pub correlations: Option<bool>,
    pub correlation_threshold: Option<f64>,
    pub save_disorder: Option<bool>,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub phi: f64,
    pub alpha: f64,
    pub steps: usize,
    pub start: SiteCoord,
    pub partner: SiteCoord,
    pub absorber: Absorber,
    pub target: SiteCoord,
    pub delta: f64,
    pub seed: u64,
    pub realizations: usize,
    pub phi_grid: Vec<f64>,
    pub symmetries: Vec<Symmetry>,
    pub metric: Metric,
    pub snapshot_stride: Option<usize>,
    pub correlations: bool,
    pub correlation_threshold: f64,
    pub save_disorder: bool,
}

fn site(name: &str, xy: [usize; 2], m: usize) -> Result<SiteCoord, ConfigError> {
    SiteCoord::new(xy[0], xy[1], m)
        .or_else(|_| invalid(format!("{name} ({}, {}) lies outside the {m}×{m} lattice", xy[0], xy[1])))
}

fn linspace(n: usize, hi: f64) -> Vec<f64> {
    match n {
        1 => vec![0.0],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { hi * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Parse and validate. `seed` (from the command line) overrides the file.
pub fn parse_config(text: &str, experiment: Experiment, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    let f: ConfigFile = toml::from_str(text)?;
    validate(f, experiment, seed)
}

pub fn validate(f: ConfigFile, experiment: Experiment, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    let m = f.m;
    if m < 2 || m % 2 != 0 {
        return invalid(format!("M must be even and at least 2, got {m}"));
    }
    let phi = f.phi.unwrap_or(0.0);
    let alpha = f.alpha.unwrap_or(0.0);
    for (name, v) in [("phi", phi), ("alpha", alpha)] {
        if !v.is_finite() {
            return invalid(format!("{name} must be finite"));
        }
    }
    LatticeSpec64::new(m, phi).or_else(|e| invalid(e.to_string()))?;

    let pair = experiment == Experiment::TwoPhoton;
    let corner_start = matches!(experiment, Experiment::Transport | Experiment::Ensemble) || pair;
    let start = match f.start {
        Some(xy) => site("start", xy, m)?,
        None if corner_start => SiteCoord { x: 1, y: 1 },
        None => SiteCoord { x: m / 2, y: m / 2 },
    };
    let partner = site("partner", f.partner.unwrap_or([1, 2]), m)?;
    let target = site("target", f.target.unwrap_or([m, m]), m)?;

    let absorber = f.absorber.unwrap_or(match experiment {
        Experiment::Transport | Experiment::Ensemble => Absorber::Projector,
        _ => Absorber::None,
    });

    let delta = f.delta.unwrap_or(0.0);
    if !(delta.is_finite() && delta >= 0.0) {
        return invalid(format!("delta must be finite and >= 0, got {delta}"));
    }
    let ordered_only = matches!(experiment, Experiment::TwoPhoton | Experiment::Spectrum | Experiment::Nonabelian);
    if ordered_only && delta > 0.0 {
        return invalid(format!("{} runs without disorder; remove delta", experiment.name()));
    }
    let realizations = f.realizations.unwrap_or(1);
    if realizations == 0 {
        return invalid("realizations must be at least 1");
    }

    let default_steps = match experiment {
        Experiment::StepCheck | Experiment::Spectrum => 1,
        _ => 20,
    };
    let steps = f.steps.unwrap_or(default_steps);
    if steps == 0 {
        return invalid("steps must be at least 1");
    }
    if f.snapshot_stride == Some(0) {
        return invalid("snapshot_stride must be positive");
    }

    let phi_grid = match (f.phi_grid, f.phi_points) {
        (Some(_), Some(_)) => return invalid("give either phi_grid or phi_points, not both"),
        (Some(g), None) => g,
        (None, Some(n)) => {
            if n == 0 {
                return invalid("phi_points must be at least 1");
            }
            let hi = f.phi_max.unwrap_or(TAU);
            if !hi.is_finite() {
                return invalid("phi_max must be finite");
            }
            linspace(n, hi)
        }
        (None, None) if experiment == Experiment::Spectrum => linspace(128, f.phi_max.unwrap_or(TAU)),
        (None, None) => vec![phi],
    };
    if phi_grid.is_empty() {
        return invalid("phi_grid must not be empty");
    }
    if phi_grid.iter().any(|p| !p.is_finite()) {
        return invalid("phi_grid values must be finite");
    }

    let symmetries = f.symmetries.unwrap_or_else(|| vec![Symmetry::Bosonic, Symmetry::Fermionic]);
    if symmetries.is_empty() {
        return invalid("symmetries must not be empty");
    }
    if pair && start == partner && symmetries.contains(&Symmetry::Fermionic) {
        return invalid("fermions cannot start on the same site");
    }
    let correlation_threshold = f.correlation_threshold.unwrap_or(0.0);
    if !(correlation_threshold.is_finite() && correlation_threshold >= 0.0) {
        return invalid("correlation_threshold must be finite and >= 0");
    }
    if experiment == Experiment::Spectrum && m * m > gaugewalk::operators::DEFAULT_DENSE_CAP {
        return invalid(format!(
            "spectrum needs a dense {0}×{0} matrix; M must be at most 64",
            m * m
        ));
    }

    Ok(RunConfig {
        experiment,
        m,
        phi,
        alpha,
        steps,
        start,
        partner,
        absorber,
        target,
        delta,
        seed: seed.or(f.seed).unwrap_or(0),
        realizations,
        phi_grid,
        symmetries,
        metric: f.metric.unwrap_or_default(),
        snapshot_stride: f.snapshot_stride,
        correlations: f.correlations.unwrap_or(false),
        correlation_threshold,
        save_disorder: f.save_disorder.unwrap_or(false),
    })
}
