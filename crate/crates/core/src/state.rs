//! One- and two-photon amplitudes on a [`SpectralGrid`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{self, Direction};
use crate::grid::SpectralGrid;

/// Tolerance on `|1 - norm|` accepted by the checked constructors.
pub const NORM_TOL: f64 = 1e-9;
/// Largest `|A_ij - A_ji|` tolerated before a two-photon state is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Frequency,
    Time,
}

fn lattice_step(grid: &SpectralGrid, domain: Domain) -> f64 {
    match domain {
        Domain::Frequency => grid.dk(),
        Domain::Time => grid.dt(),
    }
}

fn expect_domain(found: Domain, expected: Domain) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DomainMismatch { expected, found })
    }
}

/// Single-photon mode function `phi(k)` (or `u(t)` in the time domain).
#[derive(Debug, Clone, PartialEq)]
pub struct OnePhotonState {
    grid: SpectralGrid,
    amps: Vec<C64>,
    domain: Domain,
}

impl OnePhotonState {
    /// Checked constructor: length must match the grid and the state must be
    /// normalized to [`NORM_TOL`].
    pub fn new(grid: SpectralGrid, amps: Vec<C64>, domain: Domain) -> Result<Self> {
        if amps.len() != grid.m() {
            return Err(Error::Length { expected: grid.m(), found: amps.len() });
        }
        let state = Self { grid, amps, domain };
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(norm));
        }
        Ok(state)
    }

    pub(crate) fn from_raw(grid: SpectralGrid, amps: Vec<C64>, domain: Domain) -> Self {
        debug_assert_eq!(amps.len(), grid.m());
        Self { grid, amps, domain }
    }

    /// Discretized `phi(k) = e^{-(k-k0)^2 / 2 sigma_k^2} / (pi^{1/2} sigma_k)^{1/2}`,
    /// renormalized on the lattice.
    ///
    /// The window must contain `[k0 - 4 sigma_k, k0 + 4 sigma_k]` and the
    /// lattice must resolve the width (`sigma_k >= 2 dk`).
    pub fn gaussian(grid: SpectralGrid, sigma_k: f64, k0: f64) -> Result<Self> {
        if !(sigma_k > 0.0 && sigma_k.is_finite()) || !k0.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian width {sigma_k}, centre {k0}")));
        }
        let k_max = grid.k_max();
        if k0 - 4.0 * sigma_k < -k_max || k0 + 4.0 * sigma_k > k_max {
            return Err(Error::Coverage { sigma_k, k0, k_max });
        }
        if sigma_k < 2.0 * grid.dk() {
            return Err(Error::Resolution { sigma_k, dk: grid.dk() });
        }
        let peak = (PI.sqrt() * sigma_k).sqrt().recip();
        let mut amps: Vec<C64> = grid
            .momenta()
            .into_iter()
            .map(|k| {
                let x = (k - k0) / sigma_k;
                C64::new(peak * (-0.5 * x * x).exp(), 0.0)
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dk();
        let s = norm.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= s);
        Ok(Self { grid, amps, domain: Domain::Frequency })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Lattice spacing of the current domain.
    pub fn step(&self) -> f64 {
        lattice_step(&self.grid, self.domain)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.step()
    }

    pub fn expect_domain(&self, domain: Domain) -> Result<()> {
        expect_domain(self.domain, domain)
    }

    pub fn to_time(mut self) -> Result<Self> {
        self.expect_domain(Domain::Frequency)?;
        fourier::transform_1d(&mut self.amps, &self.grid, Direction::ToTime);
        self.domain = Domain::Time;
        Ok(self)
    }

    pub fn to_frequency(mut self) -> Result<Self> {
        self.expect_domain(Domain::Time)?;
        fourier::transform_1d(&mut self.amps, &self.grid, Direction::ToFrequency);
        self.domain = Domain::Frequency;
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        expect_domain(other.domain, self.domain)?;
        let s: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.step())
    }

    /// Multiply pointwise by `factor[i]`.
    pub(crate) fn scale_pointwise(mut self, factor: &[C64]) -> Self {
        self.amps.iter_mut().zip(factor).for_each(|(a, f)| *a *= f);
        self
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self
    }

    /// `<x>` over the current domain's lattice (time or momentum centroid).
    pub fn centroid(&self) -> f64 {
        let coords: Vec<f64> = match self.domain {
            Domain::Frequency => self.grid.momenta(),
            Domain::Time => self.grid.times(),
        };
        let w: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        self.amps.iter().zip(&coords).map(|(a, x)| a.norm_sqr() * x).sum::<f64>() / w
    }

    /// Root-mean-square width of `|amps|^2` over the current domain.
    pub fn rms_width(&self) -> f64 {
        let coords: Vec<f64> = match self.domain {
            Domain::Frequency => self.grid.momenta(),
            Domain::Time => self.grid.times(),
        };
        let mu = self.centroid();
        let w: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let var = self
            .amps
            .iter()
            .zip(&coords)
            .map(|(a, x)| a.norm_sqr() * (x - mu) * (x - mu))
            .sum::<f64>()
            / w;
        var.sqrt()
    }
}

/// Symmetric pair amplitude `psi(k, p)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    grid: SpectralGrid,
    amps: Vec<C64>,
    domain: Domain,
}

impl TwoPhotonState {
    /// Checked constructor: exact symmetry and normalization to [`NORM_TOL`].
    pub fn new(grid: SpectralGrid, amps: Vec<C64>, domain: Domain) -> Result<Self> {
        let m = grid.m();
        if amps.len() != m * m {
            return Err(Error::Length { expected: m * m, found: amps.len() });
        }
        let state = Self { grid, amps, domain };
        let defect = state.symmetry_defect();
        if defect > 0.0 {
            return Err(Error::Asymmetric(defect));
        }
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(norm));
        }
        Ok(state)
    }

    /// Accepts any amplitude within [`SYMMETRY_TOL`] of symmetric and
    /// symmetrizes it exactly. No normalization check.
    pub fn from_amplitudes(grid: SpectralGrid, amps: Vec<C64>, domain: Domain) -> Result<Self> {
        let m = grid.m();
        if amps.len() != m * m {
            return Err(Error::Length { expected: m * m, found: amps.len() });
        }
        Self { grid, amps, domain }.symmetrized()
    }

    pub(crate) fn from_raw(grid: SpectralGrid, amps: Vec<C64>, domain: Domain) -> Self {
        debug_assert_eq!(amps.len(), grid.m() * grid.m());
        Self { grid, amps, domain }
    }

    /// `psi(k, p) = phi(k) phi(p)`.
    pub fn product(phi: &OnePhotonState) -> Self {
        let m = phi.grid.m();
        let a = &phi.amps;
        let mut amps = vec![C64::new(0.0, 0.0); m * m];
        amps.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i] * a[j];
            }
        });
        Self { grid: phi.grid, amps, domain: phi.domain }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.amps[i * self.grid.m() + j]
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn step(&self) -> f64 {
        lattice_step(&self.grid, self.domain)
    }

    pub fn norm_sq(&self) -> f64 {
        let h = self.step();
        ordered_sum(&self.amps, self.grid.m(), |a| a.norm_sqr()) * h * h
    }

    pub fn expect_domain(&self, domain: Domain) -> Result<()> {
        expect_domain(self.domain, domain)
    }

    /// `max |A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.grid.m();
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.amps[i * m + j] - self.amps[j * m + i]).norm());
            }
        }
        worst
    }

    /// Replace `A` by `(A + A^T)/2`, rejecting defects above [`SYMMETRY_TOL`].
    pub(crate) fn symmetrized(mut self) -> Result<Self> {
        let defect = self.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::Asymmetric(defect));
        }
        let m = self.grid.m();
        for i in 0..m {
            for j in (i + 1)..m {
                let avg = 0.5 * (self.amps[i * m + j] + self.amps[j * m + i]);
                self.amps[i * m + j] = avg;
                self.amps[j * m + i] = avg;
            }
        }
        Ok(self)
    }

    /// Multiply by `factor[i] * factor[j]`; exact symmetry is preserved.
    pub(crate) fn scale_separable(mut self, factor: &[C64]) -> Self {
        let m = self.grid.m();
        self.amps.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let fi = factor[i];
            for (x, fj) in row.iter_mut().zip(factor) {
                *x *= fi * fj;
            }
        });
        self
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.amps.par_iter_mut().for_each(|a| *a *= c);
        self
    }

    pub fn to_time(mut self) -> Result<Self> {
        self.expect_domain(Domain::Frequency)?;
        fourier::transform_2d(&mut self.amps, &self.grid, Direction::ToTime);
        self.domain = Domain::Time;
        self.symmetrized()
    }

    pub fn to_frequency(mut self) -> Result<Self> {
        self.expect_domain(Domain::Time)?;
        fourier::transform_2d(&mut self.amps, &self.grid, Direction::ToFrequency);
        self.domain = Domain::Frequency;
        self.symmetrized()
    }

    /// `<self|other>` with the `dk^2` (or `dt^2`) measure.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        expect_domain(other.domain, self.domain)?;
        let h = self.step();
        let m = self.grid.m();
        let rows: Vec<C64> = self
            .amps
            .par_chunks(m)
            .zip(other.amps.par_chunks(m))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
            .collect();
        Ok(rows.iter().sum::<C64>() * h * h)
    }

    /// L2 distance `||self - other||`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        expect_domain(other.domain, self.domain)?;
        let h = self.step();
        let m = self.grid.m();
        let rows: Vec<f64> = self
            .amps
            .par_chunks(m)
            .zip(other.amps.par_chunks(m))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum())
            .collect();
        Ok(rows.iter().sum::<f64>().sqrt() * h)
    }

    /// Amplitude mass in the frame `min(i, j, m-1-i, m-1-j) < m/10`.
    pub fn edge_weight(&self) -> f64 {
        let m = self.grid.m();
        let band = m / 10;
        let h = self.step();
        let mut w = 0.0;
        for i in 0..m {
            let ei = i < band || i >= m - band;
            for j in 0..m {
                if ei || j < band || j >= m - band {
                    w += self.amps[i * m + j].norm_sqr();
                }
            }
        }
        w * h * h
    }
}

/// Operations shared by one- and two-photon states. `apply_per_photon`
/// multiplies every photon coordinate by `factor` on the current lattice:
/// pointwise for one photon, `factor[i] * factor[j]` for a pair.
pub trait PhotonState: Sized + Clone {
    fn grid(&self) -> &SpectralGrid;
    fn domain(&self) -> Domain;
    fn norm_sq(&self) -> f64;
    fn to_time(self) -> Result<Self>;
    fn to_frequency(self) -> Result<Self>;
    fn apply_per_photon(self, factor: &[C64]) -> Self;
    /// Norm carried within the outer tenth of the lattice on any axis.
    fn edge_weight(&self) -> f64;

    fn expect_domain(&self, domain: Domain) -> Result<()> {
        expect_domain(self.domain(), domain)
    }
}

impl PhotonState for OnePhotonState {
    fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn norm_sq(&self) -> f64 {
        OnePhotonState::norm_sq(self)
    }
    fn to_time(self) -> Result<Self> {
        OnePhotonState::to_time(self)
    }
    fn to_frequency(self) -> Result<Self> {
        OnePhotonState::to_frequency(self)
    }
    fn apply_per_photon(self, factor: &[C64]) -> Self {
        self.scale_pointwise(factor)
    }
    fn edge_weight(&self) -> f64 {
        let m = self.grid.m();
        let band = m / 10;
        let w: f64 = self.amps[..band].iter().chain(&self.amps[m - band..]).map(|a| a.norm_sqr()).sum();
        w * self.step()
    }
}

impl PhotonState for TwoPhotonState {
    fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn norm_sq(&self) -> f64 {
        TwoPhotonState::norm_sq(self)
    }
    fn to_time(self) -> Result<Self> {
        TwoPhotonState::to_time(self)
    }
    fn to_frequency(self) -> Result<Self> {
        TwoPhotonState::to_frequency(self)
    }
    fn apply_per_photon(self, factor: &[C64]) -> Self {
        self.scale_separable(factor)
    }
    fn edge_weight(&self) -> f64 {
        TwoPhotonState::edge_weight(self)
    }
}

/// Row-parallel sum with a fixed reduction order, so results do not depend
/// on the thread count.
fn ordered_sum(amps: &[C64], m: usize, f: impl Fn(&C64) -> f64 + Sync) -> f64 {
    let rows: Vec<f64> = amps.par_chunks(m).map(|row| row.iter().map(&f).sum()).collect();
    rows.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(1024, 16.0).unwrap()
    }

    #[test]
    fn gaussian_is_normalized() {
        let phi = OnePhotonState::gaussian(grid(), 1.0, 0.0).unwrap();
        assert!((phi.norm_sq() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_peak_matches_continuum() {
        let sigma = 0.8;
        let phi = OnePhotonState::gaussian(grid(), sigma, 0.0).unwrap();
        let expect = PI.powf(-0.25) * sigma.powf(-0.5);
        assert!((phi.amps()[512].re - expect).abs() < 1e-9);
    }

    #[test]
    fn gaussian_rejects_narrow_window() {
        let g = SpectralGrid::new(1024, 2.0).unwrap();
        assert!(matches!(OnePhotonState::gaussian(g, 1.0, 0.0), Err(Error::Coverage { .. })));
        assert!(OnePhotonState::gaussian(grid(), 0.0, 0.0).is_err());
        assert!(matches!(
            OnePhotonState::gaussian(grid(), 0.01, 0.0),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn product_is_symmetric_rank_one_and_normalized() {
        let phi = OnePhotonState::gaussian(SpectralGrid::new(128, 8.0).unwrap(), 1.0, 0.3)
            .unwrap()
            .scaled(C64::from_polar(1.0, 0.4));
        let psi = TwoPhotonState::product(&phi);
        assert_eq!(psi.symmetry_defect(), 0.0);
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let m = 128;
        for &(i, j, k, l) in &[(3, 60, 64, 70), (10, 20, 30, 40), (64, 64, 65, 66)] {
            let lhs = psi.at(i, j) * psi.at(k, l);
            let rhs = psi.at(i, l) * psi.at(k, j);
            assert!((lhs - rhs).norm() < 1e-14);
        }
        assert!(TwoPhotonState::new(*psi.grid(), psi.amps().to_vec(), Domain::Frequency).is_ok());
        assert_eq!(psi.amps().len(), m * m);
    }

    #[test]
    fn checked_constructor_rejects_asymmetry() {
        let g = SpectralGrid::new(8, 4.0).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); 64];
        amps[1] = C64::new(1.0, 0.0);
        assert!(matches!(TwoPhotonState::new(g, amps, Domain::Frequency), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn one_photon_roundtrip_and_parseval() {
        let phi = OnePhotonState::gaussian(grid(), 1.3, 0.5).unwrap();
        let t = phi.clone().to_time().unwrap();
        assert!((t.norm_sq() - 1.0).abs() < 1e-12);
        let back = t.to_frequency().unwrap();
        for (a, b) in back.amps().iter().zip(phi.amps()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn domain_tags_are_enforced() {
        let phi = OnePhotonState::gaussian(grid(), 1.0, 0.0).unwrap();
        assert!(matches!(phi.clone().to_frequency(), Err(Error::DomainMismatch { .. })));
        let t = phi.clone().to_time().unwrap();
        assert!(t.to_time().is_err());
        assert!(phi.inner(&phi.clone().to_time().unwrap()).is_err());
    }

    #[test]
    fn gaussian_maps_to_temporal_gaussian() {
        // |u(t)|^2 of a transform-limited Gaussian has rms width sigma_t / sqrt(2)
        // with sigma_t = 1/sigma_k.
        for &sigma in &[0.5, 1.0, 2.0] {
            let u = OnePhotonState::gaussian(grid(), sigma, 0.0).unwrap().to_time().unwrap();
            let sigma_t = 1.0 / sigma;
            assert!((u.rms_width() - sigma_t / 2f64.sqrt()).abs() < 1e-6, "{}", u.rms_width());
            // pointwise against the analytic pair
            let g = u.grid();
            let peak = (PI.sqrt() * sigma_t).sqrt().recip();
            for j in (0..g.m()).step_by(37) {
                let t = g.t(j);
                let expect = peak * (-0.5 * (t / sigma_t).powi(2)).exp();
                assert!((u.amps()[j] - C64::new(expect, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn two_photon_roundtrip() {
        let g = SpectralGrid::new(128, 8.0).unwrap();
        let psi = TwoPhotonState::product(&OnePhotonState::gaussian(g, 1.0, 0.2).unwrap());
        let t = psi.clone().to_time().unwrap();
        assert_eq!(t.symmetry_defect(), 0.0);
        assert!((t.norm_sq() - 1.0).abs() < 1e-12);
        let back = t.to_frequency().unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn refinement_leaves_overlaps_unchanged() {
        let coarse = SpectralGrid::new(512, 16.0).unwrap();
        let overlap = |g: SpectralGrid| {
            let a = OnePhotonState::gaussian(g, 1.0, 0.0).unwrap();
            let b = OnePhotonState::gaussian(g, 1.4, 0.3).unwrap();
            a.inner(&b).unwrap()
        };
        let d = (overlap(coarse) - overlap(coarse.refined())).norm();
        assert!(d < 1e-6, "{d}");
    }
}
