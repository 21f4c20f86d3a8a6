//! Geometry of the open-boundary M×M lattice.
//!
//! Sites carry 1-based coordinates `(x, y)` with `x, y ∈ [1, M]`. Amplitudes
//! are stored row-major with `x` outer and `y` inner, so the x-hopping
//! layers touch pairs of contiguous rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{wrap_tau, Real};

/// Lattice size and gauge parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec<T> {
    m: usize,
    flux: T,
    rashba_angle: Option<T>,
}

impl<T: Real> LatticeSpec<T> {
    /// Abelian lattice with flux `flux` per plaquette. `m` must be even and at least 2.
    pub fn new(m: usize, flux: T) -> Result<Self> {
        if m < 2 {
            return Err(Error::Lattice(format!("M must be at least 2, got {m}")));
        }
        if m % 2 != 0 {
            return Err(Error::Lattice(format!("M must be even, got {m}")));
        }
        if !num_traits::Float::is_finite(flux) {
            return Err(Error::Lattice("flux must be finite".into()));
        }
        Ok(Self { m, flux: wrap_tau(flux), rashba_angle: None })
    }

    /// Polarization-resolved lattice with Rashba angle `alpha` and no flux.
    pub fn with_rashba(m: usize, alpha: T) -> Result<Self> {
        if !num_traits::Float::is_finite(alpha) {
            return Err(Error::Lattice("rashba angle must be finite".into()));
        }
        let mut spec = Self::new(m, T::zero())?;
        spec.rashba_angle = Some(alpha);
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Flux per plaquette, reduced to `[0, 2π)`.
    pub fn flux(&self) -> T {
        self.flux
    }

    pub fn rashba_angle(&self) -> Option<T> {
        self.rashba_angle
    }

    pub fn sites(&self) -> usize {
        self.m * self.m
    }

    pub fn coord(&self, x: usize, y: usize) -> Result<SiteCoord> {
        SiteCoord::new(x, y, self.m)
    }

    pub fn index(&self, c: SiteCoord) -> Result<usize> {
        site_index(c, self.m)
    }

    /// Site `(M/2, M/2)`, one of the four equivalent central sites.
    pub fn center(&self) -> SiteCoord {
        SiteCoord { x: self.m / 2, y: self.m / 2 }
    }

    /// Every site coordinate in storage order.
    pub fn iter_sites(&self) -> impl Iterator<Item = SiteCoord> + '_ {
        (0..self.sites()).map(move |i| site_coord(i, self.m))
    }
}

/// A lattice site, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteCoord {
    pub x: usize,
    pub y: usize,
}

impl SiteCoord {
    pub fn new(x: usize, y: usize, m: usize) -> Result<Self> {
        let c = Self { x, y };
        check_bounds(c, m)?;
        Ok(c)
    }

    pub fn in_bounds(&self, m: usize) -> bool {
        (1..=m).contains(&self.x) && (1..=m).contains(&self.y)
    }

    /// True if the two sites are nearest neighbours.
    pub fn is_adjacent(&self, other: &SiteCoord) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }
}

impl std::fmt::Display for SiteCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn check_bounds(c: SiteCoord, m: usize) -> Result<()> {
    if c.in_bounds(m) {
        Ok(())
    } else {
        Err(Error::OutOfBounds { x: c.x as i64, y: c.y as i64, m })
    }
}

/// Row-major linear index `(x−1)·M + (y−1)`.
pub fn site_index(c: SiteCoord, m: usize) -> Result<usize> {
    check_bounds(c, m)?;
    Ok((c.x - 1) * m + (c.y - 1))
}

/// Inverse of [`site_index`]. Panics if `index >= m*m`.
pub fn site_coord(index: usize, m: usize) -> SiteCoord {
    assert!(index < m * m, "site index {index} out of range for M = {m}");
    SiteCoord { x: index / m + 1, y: index % m + 1 }
}

/// True iff the site lies on the outer boundary.
pub fn is_edge(c: SiteCoord, m: usize) -> Result<bool> {
    check_bounds(c, m)?;
    Ok(c.x == 1 || c.x == m || c.y == 1 || c.y == m)
}

/// Boundary mask in storage order.
pub fn edge_mask(m: usize) -> Vec<bool> {
    (0..m * m)
        .map(|i| {
            let c = site_coord(i, m);
            c.x == 1 || c.x == m || c.y == 1 || c.y == m
        })
        .collect()
}
