//! Static phase disorder on the couplers.
//!
//! Every beam splitter `V` is replaced by `diag(e^{iε_a}, e^{iε_b})·V` with
//! `ε ~ N(0, δ²)` drawn once per coupler endpoint and reused at every step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, SiteCoord};
use crate::num::{cis, Real};
use crate::operators::{layer_pairs, Mat2};

/// Identifies the generator and sampler behind every realization.
pub const SAMPLER_ID: &str = "ChaCha8Rng::seed_from_u64 + rand_distr::Normal (ziggurat), f64 draws";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    /// Standard deviation of the phases, radians.
    pub delta: f64,
    pub seed: u64,
}

impl DisorderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Config(format!("disorder strength must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// Config for ensemble member `r`.
    pub fn member(&self, r: u64) -> Self {
        Self { delta: self.delta, seed: derive_seed(self.seed, r) }
    }
}

/// SplitMix64 finalizer applied to `base + (r + 1)·γ`, γ the 64-bit golden ratio.
pub fn derive_seed(base: u64, r: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = base.wrapping_add(r.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplerPhases<T> {
    pub layer: usize,
    pub site_a: SiteCoord,
    pub site_b: SiteCoord,
    pub eps_a: T,
    pub eps_b: T,
}

/// One frozen draw of coupler phases for an M×M lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization<T> {
    pub config: DisorderConfig,
    /// Lattice size the phases were drawn for. Flux does not change the
    /// coupler layout, so one realization serves every flux on the same lattice.
    pub m: usize,
    pub sampler: String,
    /// Couplers in layer order, then construction order within each layer.
    pub couplers: Vec<CouplerPhases<T>>,
    #[serde(skip)]
    offsets: [usize; 5],
}

impl<T: Real> DisorderRealization<T> {
    /// Phases `(ε_a, ε_b)` of coupler `k` in layer `layer`.
    pub fn phases(&self, layer: usize, k: usize) -> (T, T) {
        let c = &self.couplers[self.offsets[layer] + k];
        (c.eps_a, c.eps_b)
    }

    /// Every sampled phase, in storage order.
    pub fn all_phases(&self) -> impl Iterator<Item = T> + '_ {
        self.couplers.iter().flat_map(|c| [c.eps_a, c.eps_b])
    }

    pub(crate) fn check_compatible(&self, spec: &LatticeSpec<T>) -> Result<()> {
        if self.m != spec.m() {
            return Err(Error::Config(format!(
                "disorder drawn for M = {} used with M = {}",
                self.m,
                spec.m()
            )));
        }
        let expected = layer_offsets(self.m)[4];
        if self.couplers.len() != expected {
            return Err(Error::Config(format!(
                "disorder has {} couplers, lattice has {expected}",
                self.couplers.len()
            )));
        }
        Ok(())
    }

    /// Rebuild the lookup table and verify the coupler layout, e.g. after deserializing.
    pub fn reindex(mut self) -> Result<Self> {
        let offsets = layer_offsets(self.m);
        if self.couplers.len() != offsets[4] {
            return Err(Error::Config("coupler count does not match the lattice".into()));
        }
        for l in 0..4 {
            for (k, (a, b)) in layer_pairs(self.m, l).into_iter().enumerate() {
                let c = &self.couplers[offsets[l] + k];
                if c.layer != l || c.site_a != a || c.site_b != b {
                    return Err(Error::Config(format!("coupler {k} of layer {l} is out of place")));
                }
            }
        }
        self.offsets = offsets;
        Ok(self)
    }
}

fn layer_offsets(m: usize) -> [usize; 5] {
    let mut out = [0; 5];
    for l in 0..4 {
        out[l + 1] = out[l] + layer_pairs(m, l).len();
    }
    out
}

/// Draw independent `N(0, δ²)` phases for both endpoints of every coupler.
pub fn sample_disorder<T: Real>(spec: &LatticeSpec<T>, cfg: DisorderConfig) -> Result<DisorderRealization<T>> {
    cfg.validate()?;
    let m = spec.m();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.delta).map_err(|e| Error::Config(e.to_string()))?;
    let offsets = layer_offsets(m);
    let mut couplers = Vec::with_capacity(offsets[4]);
    for l in 0..4 {
        for (a, b) in layer_pairs(m, l) {
            let eps_a = T::of(normal.sample(&mut rng));
            let eps_b = T::of(normal.sample(&mut rng));
            couplers.push(CouplerPhases { layer: l, site_a: a, site_b: b, eps_a, eps_b });
        }
    }
    Ok(DisorderRealization { config: cfg, m, sampler: SAMPLER_ID.into(), couplers, offsets })
}

/// `diag(e^{iε_a}, e^{iε_b})·block`.
pub fn dress<T: Real>(block: &Mat2<T>, eps_a: T, eps_b: T) -> Mat2<T> {
    let (pa, pb) = (cis(eps_a), cis(eps_b));
    Mat2::new(
        pa * block[(0, 0)],
        pa * block[(0, 1)],
        pb * block[(1, 0)],
        pb * block[(1, 1)],
    )
}
