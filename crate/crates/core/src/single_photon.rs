//! Single-photon evolution with an optional absorbing target and the
//! observables recorded along the way.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{sample_disorder, DisorderConfig};
use crate::error::{Error, Result};
use crate::lattice::{edge_mask, site_coord, site_index, LatticeSpec, SiteCoord};
use crate::num::{Complex, Real};
use crate::operators::{build_step, Mode, StepOperator};

/// Amplitudes over sites (and polarizations in non-Abelian mode).
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState<T: Real> {
    amplitudes: Vec<Complex<T>>,
    m: usize,
    mode: Mode,
    norm_sqr: T,
}

impl<T: Real> PhotonState<T> {
    pub fn from_amplitudes(m: usize, mode: Mode, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let expected = m * m * mode.local_dim();
        if amplitudes.len() != expected {
            return Err(Error::Dimension { expected, actual: amplitudes.len() });
        }
        let norm_sqr = norm_sqr(&amplitudes);
        if norm_sqr > T::one() + T::of(1e-12) {
            return Err(Error::Contract(format!("state norm² {norm_sqr} exceeds 1")));
        }
        Ok(Self { amplitudes, m, mode, norm_sqr })
    }

    /// Photon at `site`; in non-Abelian mode it starts horizontally polarized.
    pub fn localized(spec: &LatticeSpec<T>, site: SiteCoord, mode: Mode) -> Result<Self> {
        let i = site_index(site, spec.m())? * mode.local_dim();
        let mut amps = vec![Complex::new(T::zero(), T::zero()); spec.sites() * mode.local_dim()];
        amps[i] = Complex::new(T::one(), T::zero());
        Self::from_amplitudes(spec.m(), mode, amps)
    }

    /// Photon at `site` with polarization amplitudes `(h, v)`, normalized.
    pub fn polarized(spec: &LatticeSpec<T>, site: SiteCoord, h: Complex<T>, v: Complex<T>) -> Result<Self> {
        let n = num_traits::Float::sqrt(h.norm_sqr() + v.norm_sqr());
        if n == T::zero() {
            return Err(Error::ZeroProbability);
        }
        let i = 2 * site_index(site, spec.m())?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 2 * spec.sites()];
        amps[i] = h / n;
        amps[i + 1] = v / n;
        Self::from_amplitudes(spec.m(), Mode::NonAbelian, amps)
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Cached `Σ|ψ|²`.
    pub fn norm_sqr(&self) -> T {
        self.norm_sqr
    }

    fn refresh_norm(&mut self) {
        self.norm_sqr = norm_sqr(&self.amplitudes);
    }

    /// Probability per site, polarizations summed.
    pub fn site_probabilities(&self) -> Vec<T> {
        self.amplitudes
            .chunks(self.mode.local_dim())
            .map(|c| c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()))
            .collect()
    }

    /// Apply one step in place.
    pub fn step(&mut self, op: &StepOperator<T>) -> Result<()> {
        self.check_operator(op)?;
        op.apply_unchecked(&mut self.amplitudes);
        self.refresh_norm();
        Ok(())
    }

    fn check_operator(&self, op: &StepOperator<T>) -> Result<()> {
        if op.mode() != self.mode || op.spec().m() != self.m {
            return Err(Error::Dimension { expected: op.dim(), actual: self.amplitudes.len() });
        }
        Ok(())
    }

    /// Remove probability at `target` according to `variant`; returns the amount removed.
    fn absorb(&mut self, variant: Absorber, target: usize) -> T {
        let d = self.mode.local_dim();
        let slot = &mut self.amplitudes[target * d..(target + 1) * d];
        let before = slot.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        match variant {
            Absorber::None => return T::zero(),
            Absorber::Projector => slot.iter_mut().for_each(|z| *z = Complex::new(T::zero(), T::zero())),
            Absorber::Exponential => {
                let f = num_traits::Float::exp(-T::one());
                slot.iter_mut().for_each(|z| *z = *z * f);
            }
        }
        let after = slot.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        self.norm_sqr = self.norm_sqr - (before - after);
        before - after
    }
}

fn norm_sqr<T: Real>(amps: &[Complex<T>]) -> T {
    amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `op` applied to a copy of `state`.
pub fn apply_step<T: Real>(state: &PhotonState<T>, op: &StepOperator<T>) -> Result<PhotonState<T>> {
    let mut out = state.clone();
    out.step(op)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Absorber {
    None,
    /// Target amplitude is zeroed before each step.
    #[default]
    Projector,
    /// Target amplitude is scaled by `e^{−1}` before each step.
    Exponential,
}

impl Absorber {
    pub fn name(self) -> &'static str {
        match self {
            Absorber::None => "none",
            Absorber::Projector => "projector",
            Absorber::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorberModel {
    pub variant: Absorber,
    pub target: SiteCoord,
}

impl AbsorberModel {
    pub fn none() -> Self {
        Self { variant: Absorber::None, target: SiteCoord { x: 1, y: 1 } }
    }

    /// Absorber at the corner `(M, M)`.
    pub fn far_corner(variant: Absorber, m: usize) -> Self {
        Self { variant, target: SiteCoord { x: m, y: m } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub step: usize,
    /// `Var(x) + Var(y)` of the renormalized distribution; `None` once nothing is left.
    pub variance: Option<T>,
    pub var_x: Option<T>,
    pub var_y: Option<T>,
    /// Probability absorbed during this step.
    pub absorbed: T,
    pub eta_cum: T,
    pub norm_sqr: T,
    pub edge_prob: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T> {
    pub step: usize,
    pub probabilities: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries<T> {
    pub m: usize,
    pub absorber: AbsorberModel,
    pub initial_norm_sqr: T,
    pub records: Vec<StepRecord<T>>,
    pub snapshots: Vec<Snapshot<T>>,
}

impl<T: Real> ObservableSeries<T> {
    pub fn new(m: usize, absorber: AbsorberModel, initial_norm_sqr: T) -> Self {
        Self { m, absorber, initial_norm_sqr, records: Vec::new(), snapshots: Vec::new() }
    }

    pub fn final_norm_sqr(&self) -> T {
        self.records.last().map_or(self.initial_norm_sqr, |r| r.norm_sqr)
    }
}

/// Evolve for `steps` steps: each step absorbs at the target, then applies `op`.
///
/// `snapshot_stride = Some(k)` stores the full site distribution after every
/// `k`-th step and after the last one.
pub fn evolve<T: Real>(
    psi0: &PhotonState<T>,
    op: &StepOperator<T>,
    steps: usize,
    absorber: AbsorberModel,
    snapshot_stride: Option<usize>,
) -> Result<ObservableSeries<T>> {
    if steps == 0 {
        return Err(Error::Contract("steps must be at least 1".into()));
    }
    if snapshot_stride == Some(0) {
        return Err(Error::Config("snapshot stride must be positive".into()));
    }
    psi0.check_operator(op)?;
    let m = psi0.m;
    let target = site_index(absorber.target, m)?;
    let edges = edge_mask(m);
    let mut psi = psi0.clone();
    let mut series = ObservableSeries::new(m, absorber, psi0.norm_sqr);
    let mut eta = T::zero();
    for t in 1..=steps {
        let absorbed = psi.absorb(absorber.variant, target);
        eta = eta + absorbed;
        op.apply_unchecked(&mut psi.amplitudes);
        psi.refresh_norm();
        let prob = psi.site_probabilities();
        let (var_x, var_y) = match marginal_variances(&prob, m) {
            Ok((vx, vy)) => (Some(vx), Some(vy)),
            Err(_) => (None, None),
        };
        series.records.push(StepRecord {
            step: t,
            variance: var_x.zip(var_y).map(|(a, b)| a + b),
            var_x,
            var_y,
            absorbed,
            eta_cum: eta,
            norm_sqr: psi.norm_sqr,
            edge_prob: edge_fraction(&prob, &edges).ok(),
        });
        if let Some(k) = snapshot_stride {
            if t % k == 0 || t == steps {
                series.snapshots.push(Snapshot { step: t, probabilities: prob });
            }
        }
    }
    Ok(series)
}

fn total<T: Real>(prob: &[T]) -> Result<T> {
    let s = prob.iter().fold(T::zero(), |a, &p| a + p);
    if s <= T::zero() {
        return Err(Error::ZeroProbability);
    }
    Ok(s)
}

fn check_len<T>(prob: &[T], m: usize) -> Result<()> {
    if prob.len() != m * m {
        return Err(Error::Dimension { expected: m * m, actual: prob.len() });
    }
    Ok(())
}

/// `(Var(x), Var(y))` of the renormalized site distribution.
pub fn marginal_variances<T: Real>(prob: &[T], m: usize) -> Result<(T, T)> {
    check_len(prob, m)?;
    let norm = total(prob)?;
    let (mut sx, mut sxx, mut sy, mut syy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (i, &p) in prob.iter().enumerate() {
        let c = site_coord(i, m);
        let (x, y) = (T::of_usize(c.x), T::of_usize(c.y));
        let w = p / norm;
        sx = sx + w * x;
        sxx = sxx + w * x * x;
        sy = sy + w * y;
        syy = syy + w * y * y;
    }
    let clamp = |v: T| if v < T::zero() { T::zero() } else { v };
    Ok((clamp(sxx - sx * sx), clamp(syy - sy * sy)))
}

/// `Var(x) + Var(y)` in units of the lattice spacing squared.
pub fn variance<T: Real>(prob: &[T], m: usize) -> Result<T> {
    let (vx, vy) = marginal_variances(prob, m)?;
    Ok(vx + vy)
}

/// Fraction of the remaining probability on boundary sites.
pub fn edge_probability<T: Real>(prob: &[T], m: usize) -> Result<T> {
    check_len(prob, m)?;
    edge_fraction(prob, &edge_mask(m))
}

fn edge_fraction<T: Real>(prob: &[T], edges: &[bool]) -> Result<T> {
    let norm = total(prob)?;
    let on_edge = prob
        .iter()
        .zip(edges)
        .filter(|(_, &e)| e)
        .fold(T::zero(), |a, (&p, _)| a + p);
    Ok(on_edge / norm)
}

/// Cumulative probability absorbed at the target.
pub fn transport_efficiency<T: Real>(series: &ObservableSeries<T>) -> Result<T> {
    if series.absorber.variant == Absorber::None {
        return Err(Error::Contract("series was produced without an absorber".into()));
    }
    Ok(series.records.last().map_or(T::zero(), |r| r.eta_cum))
}

/// Parameters shared by every member of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub steps: usize,
    pub start: SiteCoord,
    pub absorber: AbsorberModel,
}

/// Mean and standard error of one observable at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub stderr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord<T> {
    pub step: usize,
    pub variance: Option<Estimate<T>>,
    pub eta_cum: Estimate<T>,
    pub norm_sqr: Estimate<T>,
    pub edge_prob: Option<Estimate<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries<T> {
    pub realizations: usize,
    pub disorder: DisorderConfig,
    pub records: Vec<EnsembleRecord<T>>,
}

fn estimate<T: Real>(values: impl Iterator<Item = T>) -> Option<Estimate<T>> {
    let v: Vec<T> = values.collect();
    if v.is_empty() {
        return None;
    }
    let n = T::of_usize(v.len());
    let mean = v.iter().fold(T::zero(), |a, &x| a + x) / n;
    let stderr = if v.len() > 1 {
        let ss = v.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
        num_traits::Float::sqrt(ss / (n - T::one()) / n)
    } else {
        T::zero()
    };
    Some(Estimate { mean, stderr })
}

/// Run one disordered evolution per realization (in parallel) and average.
///
/// Member `r` uses the disorder seed [`DisorderConfig::member`]`(r)`, so the
/// result depends only on the inputs, not on scheduling.
pub fn ensemble_run<T: Real>(
    spec: &LatticeSpec<T>,
    disorder: DisorderConfig,
    run: RunSettings,
    realizations: usize,
) -> Result<EnsembleSeries<T>> {
    if realizations == 0 {
        return Err(Error::Config("at least one realization is required".into()));
    }
    disorder.validate()?;
    let runs: Vec<ObservableSeries<T>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| single_realization(spec, disorder.member(r), &run))
        .collect::<Result<_>>()?;
    let records = (0..run.steps)
        .map(|t| {
            let at = |f: &dyn Fn(&StepRecord<T>) -> Option<T>| runs.iter().filter_map(|s| f(&s.records[t])).collect::<Vec<_>>();
            EnsembleRecord {
                step: t + 1,
                variance: estimate(at(&|r| r.variance).into_iter()),
                eta_cum: estimate(at(&|r| Some(r.eta_cum)).into_iter()).expect("nonempty ensemble"),
                norm_sqr: estimate(at(&|r| Some(r.norm_sqr)).into_iter()).expect("nonempty ensemble"),
                edge_prob: estimate(at(&|r| r.edge_prob).into_iter()),
            }
        })
        .collect();
    Ok(EnsembleSeries { realizations, disorder, records })
}

/// A single member of an ensemble, as run by [`ensemble_run`].
pub fn single_realization<T: Real>(
    spec: &LatticeSpec<T>,
    disorder: DisorderConfig,
    run: &RunSettings,
) -> Result<ObservableSeries<T>> {
    let realization = sample_disorder(spec, disorder)?;
    let op = build_step(spec, Some(&realization))?;
    let psi0 = PhotonState::localized(spec, run.start, Mode::Abelian)?;
    evolve(&psi0, &op, run.steps, run.absorber, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_step_nonabelian;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn sc(x: usize, y: usize) -> SiteCoord {
        SiteCoord { x, y }
    }

    #[test]
    fn start_on_target_is_fully_absorbed() {
        let s = LatticeSpec::<f64>::new(6, 0.3).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, sc(6, 6), Mode::Abelian).unwrap();
        let series = evolve(&psi, &op, 3, AbsorberModel::far_corner(Absorber::Projector, 6), None).unwrap();
        assert!((series.records[0].eta_cum - 1.0).abs() < 1e-15);
        assert_eq!(series.final_norm_sqr(), 0.0);
        assert_eq!(series.records[0].variance, None);
        assert!((transport_efficiency(&series).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_absorber_scales_by_e() {
        let s = LatticeSpec::<f64>::new(4, 0.0).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, sc(4, 4), Mode::Abelian).unwrap();
        let series = evolve(&psi, &op, 1, AbsorberModel::far_corner(Absorber::Exponential, 4), None).unwrap();
        let expect = 1.0 - (-2.0f64).exp();
        assert!((series.records[0].absorbed - expect).abs() < 1e-15);
        assert!((series.records[0].norm_sqr - (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn unitary_without_absorber() {
        let s = LatticeSpec::<f64>::new(6, PI / 5.0).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, sc(2, 3), Mode::Abelian).unwrap();
        let series = evolve(&psi, &op, 10, AbsorberModel::none(), None).unwrap();
        for r in &series.records {
            assert!((r.norm_sqr - 1.0).abs() < 1e-12);
            assert_eq!(r.eta_cum, 0.0);
        }
        assert!(matches!(transport_efficiency(&series), Err(Error::Contract(_))));
    }

    #[test]
    fn empty_series_has_zero_efficiency() {
        let series = ObservableSeries::new(4, AbsorberModel::far_corner(Absorber::Projector, 4), 1.0f64);
        assert_eq!(transport_efficiency(&series).unwrap(), 0.0);
    }

    #[test]
    fn evolve_rejects_bad_inputs() {
        let s = LatticeSpec::<f64>::new(4, 0.0).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, sc(1, 1), Mode::Abelian).unwrap();
        let a = AbsorberModel::far_corner(Absorber::Projector, 4);
        assert!(evolve(&psi, &op, 0, a, None).is_err());
        assert!(matches!(evolve(&psi, &op, 2, a, Some(0)), Err(Error::Config(_))));
        let other = build_step(&LatticeSpec::<f64>::new(6, 0.0).unwrap(), None).unwrap();
        assert!(matches!(evolve(&psi, &other, 2, a, None), Err(Error::Dimension { .. })));
        let bad_target = AbsorberModel { variant: Absorber::Projector, target: sc(5, 1) };
        assert!(matches!(evolve(&psi, &op, 2, bad_target, None), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn snapshots_follow_stride() {
        let s = LatticeSpec::<f64>::new(4, 0.0).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, sc(1, 1), Mode::Abelian).unwrap();
        let series = evolve(&psi, &op, 7, AbsorberModel::none(), Some(3)).unwrap();
        let steps: Vec<_> = series.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![3, 6, 7]);
        assert_eq!(series.snapshots[0].probabilities.len(), 16);
    }

    #[test]
    fn variance_examples() {
        let m = 20;
        let mut p = vec![0.0f64; m * m];
        p[site_index(sc(7, 3), m).unwrap()] = 1.0;
        assert_eq!(variance(&p, m).unwrap(), 0.0);
        let mut p = vec![0.0f64; m * m];
        p[site_index(sc(10, 10), m).unwrap()] = 0.5;
        p[site_index(sc(14, 10), m).unwrap()] = 0.5;
        assert!((variance(&p, m).unwrap() - 4.0).abs() < 1e-12);
        // renormalized before taking moments
        p.iter_mut().for_each(|v| *v *= 0.3);
        assert!((variance(&p, m).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(variance(&vec![0.0f64; m * m], m), Err(Error::ZeroProbability)));
        assert!(matches!(variance(&[1.0f64; 3], m), Err(Error::Dimension { .. })));
    }

    #[test]
    fn edge_probability_examples() {
        let m = 30;
        let mut p = vec![0.0f64; m * m];
        p[site_index(sc(1, 30), m).unwrap()] = 1.0;
        assert_eq!(edge_probability(&p, m).unwrap(), 1.0);
        let uniform = vec![1.0 / 900.0; 900];
        let e: f64 = edge_probability(&uniform, m).unwrap();
        assert!((e - 116.0 / 900.0).abs() < 1e-12);
        assert!(edge_probability(&vec![0.0f64; 900], m).is_err());
    }

    #[test]
    fn phi0_marginals_match() {
        let s = LatticeSpec::<f64>::new(20, 0.0).unwrap();
        let op = build_step(&s, None).unwrap();
        let psi = PhotonState::localized(&s, s.center(), Mode::Abelian).unwrap();
        let series = evolve(&psi, &op, 12, AbsorberModel::none(), None).unwrap();
        for r in &series.records {
            assert!((r.var_x.unwrap() - r.var_y.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn ensemble_single_member_matches_evolve() {
        let s = LatticeSpec::<f64>::new(8, 0.4).unwrap();
        let cfg = DisorderConfig { delta: 0.1, seed: 99 };
        let run = RunSettings {
            steps: 12,
            start: sc(1, 1),
            absorber: AbsorberModel::far_corner(Absorber::Projector, 8),
        };
        let ens = ensemble_run(&s, cfg, run, 1).unwrap();
        let one = single_realization(&s, cfg.member(0), &run).unwrap();
        for (e, r) in ens.records.iter().zip(&one.records) {
            assert_eq!(e.eta_cum.mean, r.eta_cum);
            assert_eq!(e.eta_cum.stderr, 0.0);
            assert_eq!(e.variance.unwrap().mean, r.variance.unwrap());
        }
    }

    #[test]
    fn ensemble_without_disorder_has_no_spread() {
        let s = LatticeSpec::<f64>::new(8, 0.4).unwrap();
        let run = RunSettings {
            steps: 10,
            start: sc(1, 1),
            absorber: AbsorberModel::far_corner(Absorber::Projector, 8),
        };
        let ens = ensemble_run(&s, DisorderConfig { delta: 0.0, seed: 1 }, run, 5).unwrap();
        for r in &ens.records {
            assert!(r.eta_cum.stderr < 1e-15);
            assert!(r.variance.unwrap().stderr < 1e-12);
        }
        assert!(ensemble_run(&s, DisorderConfig { delta: 0.0, seed: 1 }, run, 0).is_err());
    }

    #[test]
    fn ensemble_is_deterministic() {
        let s = LatticeSpec::<f64>::new(8, 0.9).unwrap();
        let run = RunSettings {
            steps: 15,
            start: sc(1, 1),
            absorber: AbsorberModel::far_corner(Absorber::Exponential, 8),
        };
        let cfg = DisorderConfig { delta: 0.2, seed: 5 };
        assert_eq!(ensemble_run(&s, cfg, run, 6).unwrap(), ensemble_run(&s, cfg, run, 6).unwrap());
    }

    #[test]
    fn polarized_state_site_probabilities() {
        let s = LatticeSpec::<f64>::with_rashba(4, 0.5).unwrap();
        let psi = PhotonState::polarized(&s, sc(2, 2), C::new(1.0, 0.0), C::new(0.0, 1.0)).unwrap();
        let p = psi.site_probabilities();
        assert_eq!(p.len(), 16);
        assert!((p[site_index(sc(2, 2), 4).unwrap()] - 1.0).abs() < 1e-15);
        let op = build_step_nonabelian(&s).unwrap();
        let out = apply_step(&psi, &op).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(matches!(
            PhotonState::<f64>::from_amplitudes(4, Mode::Abelian, vec![C::new(0.0, 0.0); 15]),
            Err(Error::Dimension { .. })
        ));
        assert!(PhotonState::<f64>::from_amplitudes(2, Mode::Abelian, vec![C::new(1.0, 0.0); 4]).is_err());
    }
}
