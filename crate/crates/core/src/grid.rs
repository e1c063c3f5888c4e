//! Uniform momentum lattice and its conjugate time lattice.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `m` momentum points `k_i = -k_max + i dk` with `dk = 2 k_max / m`, paired
/// with the time lattice `t_j = -t_max + j dt`, `dt = 2 pi / (m dk)`,
/// `t_max = pi / dk`. Frequencies and times are in units of the emitter
/// decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    m: usize,
    k_max: f64,
}

impl SpectralGrid {
    pub fn new(m: usize, k_max: f64) -> Result<Self> {
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::GridSize(m));
        }
        if !(k_max > 0.0 && k_max.is_finite()) {
            return Err(Error::GridWidth(k_max));
        }
        Ok(Self { m, k_max })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn dk(&self) -> f64 {
        2.0 * self.k_max / self.m as f64
    }

    pub fn dt(&self) -> f64 {
        2.0 * PI / (self.m as f64 * self.dk())
    }

    pub fn t_max(&self) -> f64 {
        PI / self.dk()
    }

    #[inline]
    pub fn k(&self, i: usize) -> f64 {
        -self.k_max + i as f64 * self.dk()
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        -self.t_max() + j as f64 * self.dt()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.k(i)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.t(j)).collect()
    }

    /// Total energy `k_i + k_j` on anti-diagonal `i + j = n`, `n in 0..2m-1`.
    #[inline]
    pub fn pair_energy(&self, n: usize) -> f64 {
        -2.0 * self.k_max + n as f64 * self.dk()
    }

    /// Same window, twice the points.
    pub fn refined(&self) -> Self {
        Self { m: 2 * self.m, k_max: self.k_max }
    }
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self { m: 1024, k_max: 8.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_spacing() {
        let g = SpectralGrid::new(8, 4.0).unwrap();
        assert_eq!(g.dk(), 1.0);
        assert!((g.dt() - 2.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!(g.k(0), -4.0);
        assert_eq!(g.k(7), 3.0);
    }

    #[test]
    fn production_grid_spacing() {
        let g = SpectralGrid::new(512, 16.0).unwrap();
        assert_eq!(g.dk(), 1.0 / 16.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(SpectralGrid::new(7, 4.0), Err(Error::GridSize(7)));
        assert_eq!(SpectralGrid::new(4, 4.0), Err(Error::GridSize(4)));
        assert!(SpectralGrid::new(8, 0.0).is_err());
        assert!(SpectralGrid::new(8, -1.0).is_err());
        assert!(SpectralGrid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn lattices_are_conjugate() {
        for &(m, k) in &[(8, 4.0), (256, 8.0), (1024, 16.0), (64, 0.3)] {
            let g = SpectralGrid::new(m, k).unwrap();
            let prod = g.dk() * g.dt() * m as f64;
            assert!((prod - 2.0 * PI).abs() < 1e-12, "{prod}");
            assert!((g.t(m / 2)).abs() < 1e-12);
        }
    }
}
