//! Beam-splitter couplers, the four substep layers and the full step
//! operator `U4·U3·U2·U1`.
//!
//! Layer geometry on an M×M lattice (M even):
//!
//! * `U1`: x-pairs `(2k+1, 2k+2)`, `k = 0..M/2`, at every `y`.
//! * `U2`: x-pairs `(2k, 2k+1)`, `k = 1..M/2`, at every `y`; rows `x = 1`, `x = M` idle.
//! * `U3`: y-pairs `(2k+1, 2k+2)` at every `x`, phase `θ = x·φ`.
//! * `U4`: y-pairs `(2k, 2k+1)` at every `x`, phase `θ = x·φ`; columns `y = 1`, `y = M` idle.
//!
//! Idle sites see the identity. In polarization-resolved (non-Abelian) mode
//! every site carries two amplitudes, H then V, at indices `2s` and `2s + 1`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{dress, DisorderRealization};
use crate::error::{Error, Result};
use crate::lattice::{site_index, LatticeSpec, SiteCoord};
use crate::num::{cis, Complex, Real};

pub type Mat2<T> = Matrix2<Complex<T>>;
pub type Mat4<T> = Matrix4<Complex<T>>;

/// Default cap on dense-matrix rows.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Abelian,
    NonAbelian,
}

impl Mode {
    /// Amplitudes per site.
    pub fn local_dim(self) -> usize {
        match self {
            Mode::Abelian => 1,
            Mode::NonAbelian => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Index of a substep layer, `0..4` for `U1..U4`.
pub type LayerIndex = usize;

/// Site pairs coupled by layer `layer` (0-based), in construction order.
///
/// The first site of each pair has the smaller coordinate along the hopping axis.
pub fn layer_pairs(m: usize, layer: LayerIndex) -> Vec<(SiteCoord, SiteCoord)> {
    let half = m / 2;
    let starts: Vec<usize> = match layer {
        0 | 2 => (0..half).map(|k| 2 * k + 1).collect(),
        1 | 3 => (1..half).map(|k| 2 * k).collect(),
        _ => panic!("layer index {layer} out of range"),
    };
    let mut pairs = Vec::with_capacity(starts.len() * m);
    for &s in &starts {
        for o in 1..=m {
            let pair = if layer < 2 {
                (SiteCoord { x: s, y: o }, SiteCoord { x: s + 1, y: o })
            } else {
                (SiteCoord { x: o, y: s }, SiteCoord { x: o, y: s + 1 })
            };
            pairs.push(pair);
        }
    }
    pairs
}

pub fn layer_axis(layer: LayerIndex) -> Axis {
    if layer < 2 {
        Axis::X
    } else {
        Axis::Y
    }
}

/// Unbiased beam splitter `(1/√2)[[1, i], [i, 1]]` on `(|x⟩, |x+1⟩)`.
pub fn beam_splitter_x<T: Real>() -> Mat2<T> {
    beam_splitter_y(T::zero())
}

/// Phase-shifted beam splitter `(1/√2)[[1, i·e^{−iθ}], [i·e^{iθ}, 1]]` on `(|y⟩, |y+1⟩)`.
pub fn beam_splitter_y<T: Real>(theta: T) -> Mat2<T> {
    let s = T::FRAC_1_SQRT_2();
    let one = Complex::new(s, T::zero());
    let i = Complex::new(T::zero(), s);
    Mat2::new(one, i * cis(-theta), i * cis(theta), one)
}

/// `exp(i·α·σ_y)`.
pub fn rashba_x<T: Real>(alpha: T) -> Mat2<T> {
    let (s, c) = num_traits::Float::sin_cos(alpha);
    let z = T::zero();
    Mat2::new(
        Complex::new(c, z),
        Complex::new(s, z),
        Complex::new(-s, z),
        Complex::new(c, z),
    )
}

/// `exp(−i·α·σ_x)`.
pub fn rashba_y<T: Real>(alpha: T) -> Mat2<T> {
    let (s, c) = num_traits::Float::sin_cos(alpha);
    let z = T::zero();
    Mat2::new(
        Complex::new(c, z),
        Complex::new(z, -s),
        Complex::new(z, -s),
        Complex::new(c, z),
    )
}

/// Polarization-resolved coupler `(1/√2)[[I, i·U†], [i·U, I]]` on
/// `(|a,H⟩, |a,V⟩, |b,H⟩, |b,V⟩)`.
pub fn polarized_block<T: Real>(link: &Mat2<T>) -> Mat4<T> {
    let s = T::FRAC_1_SQRT_2();
    let i = Complex::new(T::zero(), s);
    let diag = Complex::new(s, T::zero());
    let adj = link.adjoint();
    let mut out = Mat4::zeros();
    for r in 0..2 {
        out[(r, r)] = diag;
        out[(r + 2, r + 2)] = diag;
        for col in 0..2 {
            out[(r, col + 2)] = i * adj[(r, col)];
            out[(r + 2, col)] = i * link[(r, col)];
        }
    }
    out
}

/// Non-Abelian holonomy `Ux·Uy·Ux†·Uy†` around an elementary cell.
pub fn wilson_loop<T: Real>(alpha: T) -> Mat2<T> {
    let ux = rashba_x(alpha);
    let uy = rashba_y(alpha);
    ux * uy * ux.adjoint() * uy.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplerMatrix<T: Real> {
    Scalar(Mat2<T>),
    Polarized(Mat4<T>),
}

impl<T: Real> CouplerMatrix<T> {
    /// Largest entry of `|M†M − I|`.
    pub fn unitarity_deviation(&self) -> T {
        match self {
            CouplerMatrix::Scalar(m) => max_abs(&(m.adjoint() * m - Mat2::identity())),
            CouplerMatrix::Polarized(m) => max_abs(&(m.adjoint() * m - Mat4::identity())),
        }
    }
}

fn max_abs<T: Real, R: nalgebra::Dim, C: nalgebra::Dim, S>(m: &nalgebra::Matrix<Complex<T>, R, C, S>) -> T
where
    S: nalgebra::RawStorage<Complex<T>, R, C>,
{
    m.iter().map(|z| z.norm()).fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// One beam splitter between two adjacent waveguides.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplerBlock<T: Real> {
    pub site_a: SiteCoord,
    pub site_b: SiteCoord,
    index_a: usize,
    index_b: usize,
    pub matrix: CouplerMatrix<T>,
}

impl<T: Real> CouplerBlock<T> {
    fn new(site_a: SiteCoord, site_b: SiteCoord, m: usize, matrix: CouplerMatrix<T>) -> Self {
        debug_assert!(site_a.is_adjacent(&site_b));
        Self {
            site_a,
            site_b,
            index_a: site_index(site_a, m).expect("layer sites are in bounds"),
            index_b: site_index(site_b, m).expect("layer sites are in bounds"),
            matrix,
        }
    }

    /// Linear site indices `(a, b)`.
    pub fn indices(&self) -> (usize, usize) {
        (self.index_a, self.index_b)
    }

    #[inline]
    fn apply(&self, amps: &mut [Complex<T>]) {
        match &self.matrix {
            CouplerMatrix::Scalar(m) => {
                let (ia, ib) = (self.index_a, self.index_b);
                let (a, b) = (amps[ia], amps[ib]);
                amps[ia] = m[(0, 0)] * a + m[(0, 1)] * b;
                amps[ib] = m[(1, 0)] * a + m[(1, 1)] * b;
            }
            CouplerMatrix::Polarized(m) => {
                let idx = [
                    2 * self.index_a,
                    2 * self.index_a + 1,
                    2 * self.index_b,
                    2 * self.index_b + 1,
                ];
                let v = idx.map(|i| amps[i]);
                for (r, &i) in idx.iter().enumerate() {
                    amps[i] = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
                }
            }
        }
    }
}

/// A set of couplers on pairwise disjoint site pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T: Real> {
    pub blocks: Vec<CouplerBlock<T>>,
}

impl<T: Real> Layer<T> {
    fn apply(&self, amps: &mut [Complex<T>]) {
        for b in &self.blocks {
            b.apply(amps);
        }
    }

    /// True if no site appears in more than one block.
    pub fn is_disjoint(&self, sites: usize) -> bool {
        let mut seen = vec![false; sites];
        for b in &self.blocks {
            for i in [b.index_a, b.index_b] {
                if std::mem::replace(&mut seen[i], true) {
                    return false;
                }
            }
        }
        true
    }
}

/// One full walk step, stored as four ordered layers.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOperator<T: Real> {
    layers: [Layer<T>; 4],
    mode: Mode,
    spec: LatticeSpec<T>,
}

impl<T: Real> StepOperator<T> {
    pub fn layers(&self) -> &[Layer<T>; 4] {
        &self.layers
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn spec(&self) -> &LatticeSpec<T> {
        &self.spec
    }

    /// Length of a state vector this operator acts on.
    pub fn dim(&self) -> usize {
        self.spec.sites() * self.mode.local_dim()
    }

    /// Operator with four empty layers, i.e. the identity.
    pub fn identity(spec: LatticeSpec<T>, mode: Mode) -> Self {
        let empty = || Layer { blocks: Vec::new() };
        Self { layers: [empty(), empty(), empty(), empty()], mode, spec }
    }

    /// Apply `U4·U3·U2·U1` in place.
    pub fn apply(&self, amps: &mut [Complex<T>]) -> Result<()> {
        if amps.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: amps.len() });
        }
        self.apply_unchecked(amps);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&self, amps: &mut [Complex<T>]) {
        for layer in &self.layers {
            layer.apply(amps);
        }
    }

    /// Apply the step to every row of a row-major `rows × dim` matrix.
    pub(crate) fn apply_to_rows(&self, data: &mut [Complex<T>]) {
        let dim = self.dim();
        debug_assert_eq!(data.len() % dim, 0);
        data.par_chunks_mut(dim).for_each(|row| self.apply_unchecked(row));
    }

    /// Dense matrix of the full step.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex<T>>> {
        self.dense_matrix_capped(DEFAULT_DENSE_CAP)
    }

    pub fn dense_matrix_capped(&self, cap: usize) -> Result<DMatrix<Complex<T>>> {
        let n = self.dim();
        if n > cap {
            return Err(Error::TooLarge { rows: n, cap });
        }
        // Column j is U·e_j; build them as rows of a scratch buffer, then transpose.
        let mut rows = vec![Complex::new(T::zero(), T::zero()); n * n];
        for j in 0..n {
            rows[j * n + j] = Complex::new(T::one(), T::zero());
        }
        self.apply_to_rows(&mut rows);
        Ok(DMatrix::from_row_slice(n, n, &rows).transpose())
    }
}

/// Phase of the directed hop `from → to` implied by the Landau-gauge layers:
/// x-hops carry no phase, `y → y+1` at column `x` carries `e^{i·x·φ}`.
pub fn link_phase<T: Real>(spec: &LatticeSpec<T>, from: SiteCoord, to: SiteCoord) -> Result<Complex<T>> {
    let m = spec.m();
    if !from.in_bounds(m) || !to.in_bounds(m) {
        let bad = if from.in_bounds(m) { to } else { from };
        return Err(Error::OutOfBounds { x: bad.x as i64, y: bad.y as i64, m });
    }
    if !from.is_adjacent(&to) {
        return Err(Error::Path(format!("{from} and {to} are not nearest neighbours")));
    }
    if from.x != to.x {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let theta = T::of_usize(from.x) * spec.flux();
    Ok(if to.y == from.y + 1 { cis(theta) } else { cis(-theta) })
}

/// Product of link phases around a closed nearest-neighbour cycle.
///
/// The cycle may be given with or without the starting site repeated at the end.
pub fn plaquette_holonomy<T: Real>(spec: &LatticeSpec<T>, cycle: &[SiteCoord]) -> Result<Complex<T>> {
    let path = match cycle {
        [first, .., last] if first == last => &cycle[..cycle.len() - 1],
        _ => cycle,
    };
    if path.len() < 2 {
        return Err(Error::Path("a cycle needs at least two distinct hops".into()));
    }
    let mut acc = Complex::new(T::one(), T::zero());
    for (k, &from) in path.iter().enumerate() {
        let to = path[(k + 1) % path.len()];
        acc *= link_phase(spec, from, to)?;
    }
    Ok(acc)
}

/// Counterclockwise boundary of the `w × h` rectangle of cells whose lower-left site is `origin`.
pub fn rectangle_loop(origin: SiteCoord, w: usize, h: usize) -> Vec<SiteCoord> {
    let SiteCoord { x, y } = origin;
    let mut out = Vec::with_capacity(2 * (w + h));
    out.extend((0..w).map(|i| SiteCoord { x: x + i, y }));
    out.extend((0..h).map(|j| SiteCoord { x: x + w, y: y + j }));
    out.extend((0..w).map(|i| SiteCoord { x: x + w - i, y: y + h }));
    out.extend((0..h).map(|j| SiteCoord { x, y: y + h - j }));
    out
}

/// Abelian step operator, optionally dressed with static phase disorder.
pub fn build_step<T: Real>(
    spec: &LatticeSpec<T>,
    disorder: Option<&DisorderRealization<T>>,
) -> Result<StepOperator<T>> {
    if spec.rashba_angle().is_some() {
        return Err(Error::Config("spec carries a Rashba angle; use build_step_nonabelian".into()));
    }
    let m = spec.m();
    if let Some(d) = disorder {
        d.check_compatible(spec)?;
    }
    let phi = spec.flux();
    let layers = std::array::from_fn(|l| {
        let pairs = layer_pairs(m, l);
        let blocks = pairs
            .into_iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let mut mat = match layer_axis(l) {
                    Axis::X => beam_splitter_x(),
                    Axis::Y => beam_splitter_y(T::of_usize(a.x) * phi),
                };
                if let Some(d) = disorder {
                    let (ea, eb) = d.phases(l, k);
                    mat = dress(&mat, ea, eb);
                }
                CouplerBlock::new(a, b, m, CouplerMatrix::Scalar(mat))
            })
            .collect();
        Layer { blocks }
    });
    Ok(StepOperator { layers, mode: Mode::Abelian, spec: *spec })
}

/// Polarization-resolved step with Rashba link unitaries and no flux.
pub fn build_step_nonabelian<T: Real>(spec: &LatticeSpec<T>) -> Result<StepOperator<T>> {
    let alpha = spec
        .rashba_angle()
        .ok_or_else(|| Error::Config("non-Abelian step needs a Rashba angle".into()))?;
    let m = spec.m();
    let bx = polarized_block(&rashba_x(alpha));
    let by = polarized_block(&rashba_y(alpha));
    let layers = std::array::from_fn(|l| {
        let mat = match layer_axis(l) {
            Axis::X => bx,
            Axis::Y => by,
        };
        let blocks = layer_pairs(m, l)
            .into_iter()
            .map(|(a, b)| CouplerBlock::new(a, b, m, CouplerMatrix::Polarized(mat)))
            .collect();
        Layer { blocks }
    });
    Ok(StepOperator { layers, mode: Mode::NonAbelian, spec: *spec })
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation<T: Real>(u: &DMatrix<Complex<T>>) -> T {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::identity(n, n)))
}
