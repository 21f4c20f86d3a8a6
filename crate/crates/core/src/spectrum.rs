//! Quasienergies of the step operator, `H_eff = i·log U_step`.
//!
//! An eigenvalue `e^{iθ}` of `U_step` gives the quasienergy `ε = −θ`,
//! principal branch, reported in `(−π, π]`.

use nalgebra::{DMatrix, Schur};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::num::{Complex, Real};
use crate::operators::{build_step, StepOperator, DEFAULT_DENSE_CAP};

/// Unit-modulus tolerance for eigenvalues of a unitary step.
pub const UNIT_MODULUS_TOL: f64 = 1e-8;

const SCHUR_SWEEPS_PER_ROW: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasienergySpectrum<T> {
    pub phi: T,
    pub m: usize,
    /// Sorted ascending, each in `(−π, π]`.
    pub energies: Vec<T>,
}

/// Map `−arg(λ)` into `(−π, π]`.
pub fn quasienergy_of<T: Real>(lambda: Complex<T>) -> T {
    let e = -lambda.arg();
    if e <= -T::PI() {
        e + T::TAU()
    } else {
        e
    }
}

/// Quasienergies of an arbitrary dense unitary.
pub fn quasienergies_of_matrix<T: Real>(u: DMatrix<Complex<T>>) -> Result<Vec<T>> {
    let n = u.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // nalgebra's default tolerance (one ulp) stalls on degenerate clusters,
    // e.g. the zero-flux spectrum; a few ulps converges in the usual sweep count.
    let eps = <T as num_traits::Float>::epsilon() * T::of(16.0);
    let eig = Schur::try_new(u, eps, SCHUR_SWEEPS_PER_ROW * n)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::Contract("Schur iteration did not converge".into()))?;
    let mut worst = 0.0f64;
    for z in eig.iter() {
        worst = worst.max((z.norm() - T::one()).to_f64_lossy().abs());
    }
    if !(worst <= UNIT_MODULUS_TOL) {
        return Err(Error::NotUnitary(worst));
    }
    let mut energies: Vec<T> = eig.iter().map(|&z| quasienergy_of(z)).collect();
    energies.sort_by(|a, b| a.partial_cmp(b).expect("finite quasienergies"));
    Ok(energies)
}

pub fn quasienergies<T: Real>(op: &StepOperator<T>) -> Result<QuasienergySpectrum<T>> {
    quasienergies_capped(op, DEFAULT_DENSE_CAP)
}

pub fn quasienergies_capped<T: Real>(op: &StepOperator<T>, cap: usize) -> Result<QuasienergySpectrum<T>> {
    let u = op.dense_matrix_capped(cap)?;
    Ok(QuasienergySpectrum {
        phi: op.spec().flux(),
        m: op.spec().m(),
        energies: quasienergies_of_matrix(u)?,
    })
}

/// One disorder-free spectrum per flux value, computed independently.
///
/// `phi` in each result is the grid value as given, not the reduced flux.
pub fn butterfly_sweep<T: Real>(m: usize, phis: &[T]) -> Result<Vec<QuasienergySpectrum<T>>> {
    if phis.is_empty() {
        return Err(Error::Config("flux grid is empty".into()));
    }
    phis.par_iter()
        .map(|&phi| {
            let spec = LatticeSpec::new(m, phi)?;
            let mut s = quasienergies(&build_step(&spec, None)?)?;
            s.phi = phi;
            Ok(s)
        })
        .collect()
}

/// `n` points from 0 to 2π inclusive; the last point is exactly `2π`.
pub fn flux_grid<T: Real>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    T::TAU()
                } else {
                    T::TAU() * T::of_usize(k) / T::of_usize(n - 1)
                }
            })
            .collect(),
    }
}

/// Largest deviation between two quasienergy multisets, treating the values
/// as points on the circle so that `π` and `−π + 0⁺` are neighbours.
pub fn spectrum_distance<T: Real>(a: &[T], b: &[T]) -> Option<T> {
    if a.len() != b.len() {
        return None;
    }
    let direct = sorted_max_diff(a, b);
    // values within a hair of the branch cut can land on either side of it
    let eps = T::of(1e-6);
    let shift = |v: &[T]| -> Vec<T> {
        v.iter().map(|&e| if e > T::PI() - eps { e - T::TAU() } else { e }).collect()
    };
    let wrapped = sorted_max_diff(&shift(a), &shift(b));
    Some(if wrapped < direct { wrapped } else { direct })
}

fn sorted_max_diff<T: Real>(a: &[T], b: &[T]) -> T {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.iter()
        .zip(&b)
        .map(|(x, y)| num_traits::Float::abs(*x - *y))
        .fold(T::zero(), |m, d| if d > m { d } else { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Mode;
    use crate::num::cis;
    use std::f64::consts::PI;

    #[test]
    fn identity_has_zero_quasienergies() {
        let spec = LatticeSpec::<f64>::new(4, 0.0f64).unwrap();
        let s = quasienergies(&StepOperator::identity(spec, Mode::Abelian)).unwrap();
        assert_eq!(s.energies.len(), 16);
        assert!(s.energies.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn branch_mapping() {
        assert!((quasienergy_of(cis(0.3f64)) + 0.3).abs() < 1e-15);
        assert_eq!(quasienergy_of(Complex::new(-1.0f64, 0.0)), PI);
        assert_eq!(quasienergy_of(Complex::new(-1.0f64, -0.0)), PI);
    }

    #[test]
    fn round_trip_against_eigenvalues() {
        let op = build_step(&LatticeSpec::<f64>::new(6, 0.9f64).unwrap(), None).unwrap();
        let u = op.dense_matrix().unwrap();
        let eig: Vec<Complex<f64>> = u.clone().eigenvalues().unwrap().iter().copied().collect();
        let s = quasienergies(&op).unwrap();
        let mut unused = eig.clone();
        for e in &s.energies {
            let z = cis(-*e);
            let (k, d) = unused
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(d < 1e-8);
            unused.swap_remove(k);
        }
        assert!(s.energies.iter().all(|e| *e > -PI && *e <= PI));
    }

    #[test]
    fn two_pi_is_same_operator() {
        let a = quasienergies(&build_step(&LatticeSpec::<f64>::new(4, 0.0f64).unwrap(), None).unwrap()).unwrap();
        let b = quasienergies(&build_step(&LatticeSpec::<f64>::new(4, 2.0 * PI).unwrap(), None).unwrap()).unwrap();
        assert_eq!(a.energies, b.energies);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = DMatrix::<Complex<f64>>::identity(3, 3);
        u[(0, 0)] = Complex::new(1.1, 0.0);
        assert!(matches!(quasienergies_of_matrix(u), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let op = build_step(&LatticeSpec::<f64>::new(8, 0.1f64).unwrap(), None).unwrap();
        assert!(matches!(quasienergies_capped(&op, 10), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn grid_endpoints() {
        let g = flux_grid::<f64>(128);
        assert_eq!(g.len(), 128);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[127], 2.0 * PI);
        assert!(butterfly_sweep::<f64>(4, &[]).is_err());
    }

    #[test]
    fn distance_handles_branch_cut() {
        let a = [-1.0, 0.5, PI];
        let b = [-PI + 1e-12, -1.0, 0.5];
        assert!(spectrum_distance(&a, &b).unwrap() < 1e-11);
        assert!(spectrum_distance(&a, &b[..2]).is_none());
    }
}
