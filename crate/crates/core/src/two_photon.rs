//! Two indistinguishable photons on the polarization-independent circuit.
//!
//! The pair amplitude `ψ(r1, r2)` is stored as a dense row-major `n × n`
//! matrix, `n = M²`. One step maps `Ψ → U·Ψ·Uᵀ`; exchange symmetry set by
//! the polarization entanglement is preserved because `U ⊗ U` commutes with
//! the swap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{edge_mask, site_coord, site_index, LatticeSpec, SiteCoord};
use crate::num::{Complex, Real};
use crate::operators::{Mode, StepOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Bosonic,
    Fermionic,
}

impl Symmetry {
    pub fn sign(self) -> f64 {
        match self {
            Symmetry::Bosonic => 1.0,
            Symmetry::Fermionic => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Bosonic => "bosonic",
            Symmetry::Fermionic => "fermionic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
        }
    }

    fn distance<T: Real>(self, a: SiteCoord, b: SiteCoord) -> T {
        let dx = T::of_usize(a.x.abs_diff(b.x));
        let dy = T::of_usize(a.y.abs_diff(b.y));
        match self {
            Metric::Euclidean => num_traits::Float::sqrt(dx * dx + dy * dy),
            Metric::Manhattan => dx + dy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState<T: Real> {
    m: usize,
    amplitudes: Vec<Complex<T>>,
    symmetry: Symmetry,
    norm_sqr: T,
}

impl<T: Real> TwoPhotonState<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn norm_sqr(&self) -> T {
        self.norm_sqr
    }

    /// Amplitudes `ψ(r1, r2)` at `r1·M² + r2`.
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, r1: SiteCoord, r2: SiteCoord) -> Result<Complex<T>> {
        let n = self.m * self.m;
        Ok(self.amplitudes[site_index(r1, self.m)? * n + site_index(r2, self.m)?])
    }

    /// Largest `|ψ(r2, r1) ∓ ψ(r1, r2)|` for the state's own symmetry.
    pub fn symmetry_deviation(&self) -> T {
        let n = self.m * self.m;
        let s = T::of(self.symmetry.sign());
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                let d = (self.amplitudes[j * n + i] - self.amplitudes[i * n + j] * s).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    fn refresh_norm(&mut self) {
        self.norm_sqr = self.amplitudes.par_iter().map(|z| z.norm_sqr()).reduce(T::zero, |a, b| a + b);
    }

    fn nonzero_norm(&self) -> Result<T> {
        if self.norm_sqr <= T::zero() {
            Err(Error::ZeroProbability)
        } else {
            Ok(self.norm_sqr)
        }
    }
}

/// `(|a, b⟩ ± |b, a⟩)/√2`, or `|a, a⟩` for a bosonic pair on one site.
pub fn init_pair<T: Real>(
    spec: &LatticeSpec<T>,
    a: SiteCoord,
    b: SiteCoord,
    symmetry: Symmetry,
) -> Result<TwoPhotonState<T>> {
    let m = spec.m();
    let n = m * m;
    let (ia, ib) = (site_index(a, m)?, site_index(b, m)?);
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); n * n];
    if ia == ib {
        if symmetry == Symmetry::Fermionic {
            return Err(Error::Exclusion);
        }
        amplitudes[ia * n + ia] = Complex::new(T::one(), T::zero());
    } else {
        let s = T::FRAC_1_SQRT_2();
        amplitudes[ia * n + ib] = Complex::new(s, T::zero());
        amplitudes[ib * n + ia] = Complex::new(s * T::of(symmetry.sign()), T::zero());
    }
    let mut st = TwoPhotonState { m, amplitudes, symmetry, norm_sqr: T::zero() };
    st.refresh_norm();
    Ok(st)
}

fn transpose_into<T: Real>(src: &[Complex<T>], dst: &mut [Complex<T>], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * n + j];
        }
    });
}

/// Apply `U ⊗ U` for `steps` steps.
pub fn evolve_pair<T: Real>(
    state: &TwoPhotonState<T>,
    op: &StepOperator<T>,
    steps: usize,
) -> Result<TwoPhotonState<T>> {
    if op.mode() != Mode::Abelian {
        return Err(Error::Config(
            "two-photon evolution needs a polarization-independent (Abelian) step".into(),
        ));
    }
    let n = state.m * state.m;
    if op.dim() != n {
        return Err(Error::Dimension { expected: op.dim(), actual: n });
    }
    let mut out = state.clone();
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); n * n];
    for _ in 0..steps {
        // rows: Ψ·Uᵀ; transpose; rows again; transpose back gives U·Ψ·Uᵀ
        op.apply_to_rows(&mut out.amplitudes);
        transpose_into(&out.amplitudes, &mut scratch, n);
        op.apply_to_rows(&mut scratch);
        transpose_into(&scratch, &mut out.amplitudes, n);
    }
    out.refresh_norm();
    Ok(out)
}

/// Expected distance between the photons, in lattice spacings.
pub fn mean_distance<T: Real>(state: &TwoPhotonState<T>, metric: Metric) -> Result<T> {
    let norm = state.nonzero_norm()?;
    let m = state.m;
    let n = m * m;
    let coords: Vec<SiteCoord> = (0..n).map(|i| site_coord(i, m)).collect();
    let acc = state
        .amplitudes
        .par_chunks(n)
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .zip(&coords)
                .fold(T::zero(), |a, (z, &c)| a + z.norm_sqr() * metric.distance::<T>(coords[i], c))
        })
        .reduce(T::zero, |a, b| a + b);
    Ok(acc / norm)
}

/// Probability that both photons sit on boundary sites.
pub fn both_edge_probability<T: Real>(state: &TwoPhotonState<T>) -> Result<T> {
    let norm = state.nonzero_norm()?;
    let n = state.m * state.m;
    let edges = edge_mask(state.m);
    let mut acc = T::zero();
    for (i, row) in state.amplitudes.chunks(n).enumerate() {
        if !edges[i] {
            continue;
        }
        for (z, &e) in row.iter().zip(&edges) {
            if e {
                acc = acc + z.norm_sqr();
            }
        }
    }
    Ok(acc / norm)
}

/// Coincidence probabilities over unordered site pairs.
///
/// Stored as a symmetric `n × n` matrix; each unordered pair is counted once
/// when summing.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    pub n: usize,
    pub values: Vec<T>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn get(&self, i1: usize, i2: usize) -> T {
        self.values[i1 * self.n + i2]
    }

    /// `(i1, i2, Γ)` for `i1 ≤ i2` and `Γ > threshold`.
    pub fn entries(&self, threshold: T) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i..self.n).filter_map(move |j| {
                let v = self.get(i, j);
                (v > threshold).then_some((i, j, v))
            })
        })
    }

    /// Sum over unordered pairs.
    pub fn total(&self) -> T {
        self.entries(T::neg_infinity()).fold(T::zero(), |a, (_, _, v)| a + v)
    }

    /// Probability that at least one photon is found at each site, counting
    /// a doubly occupied site twice.
    pub fn site_marginal(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (0..self.n).fold(T::zero(), |a, j| {
                    let v = self.get(i, j);
                    a + if i == j { v + v } else { v }
                })
            })
            .collect()
    }
}

pub fn correlation_matrix<T: Real>(state: &TwoPhotonState<T>) -> Result<CorrelationMatrix<T>> {
    state.nonzero_norm()?;
    let n = state.m * state.m;
    let a = &state.amplitudes;
    let mut values = vec![T::zero(); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                a[i * n + i].norm_sqr()
            } else {
                a[i * n + j].norm_sqr() + a[j * n + i].norm_sqr()
            };
        }
    });
    Ok(CorrelationMatrix { n, values })
}
