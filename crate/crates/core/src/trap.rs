//! Harmonic temporal trap built from quadratic spectral and temporal phases.
//!
//! `e^{-i l1 k^2} e^{-i l2 t^2} e^{-i l3 k^2}` equals a phase-space rotation
//! `exp[-i w (s^2 k^2 / 2 + t^2 / (2 s^2))]`, up to a global phase, when
//! `l1 = l3 = s^2 tan(w/2) / 2` and `l2 = sin(w) / (2 s^2)`. A transform-limited
//! Gaussian of temporal width `s` is its ground state.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::state::{Domain, PhotonState};

/// Largest norm fraction allowed in the outer tenth of the time window when
/// a temporal phase is applied.
pub const WINDOW_GUARD: f64 = 1e-8;

/// Rotation angle and temporal width a trap was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub omega_dt: f64,
    pub sigma_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    /// Spectral phase applied first (units of 1/gamma^2).
    pub lambda1: f64,
    /// Temporal phase (units of gamma^2).
    pub lambda2: f64,
    /// Spectral phase applied last.
    pub lambda3: f64,
    pub rotation: Option<Rotation>,
}

impl TrapParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        Self { lambda1, lambda2, lambda3, rotation: None }
    }

    /// `lambda3 = lambda1`.
    pub fn symmetric(lambda1: f64, lambda2: f64) -> Self {
        Self::new(lambda1, lambda2, lambda1)
    }

    pub fn from_rotation(omega_dt: f64, sigma_t: f64) -> Result<Self> {
        if !(omega_dt.abs() < std::f64::consts::PI) {
            return Err(Error::RotationAngle(omega_dt));
        }
        if !(sigma_t > 0.0 && sigma_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("temporal width must be positive, got {sigma_t}")));
        }
        let s2 = sigma_t * sigma_t;
        let lambda1 = s2 * (0.5 * omega_dt).tan() / 2.0;
        let lambda2 = omega_dt.sin() / (2.0 * s2);
        Ok(Self { lambda1, lambda2, lambda3: lambda1, rotation: Some(Rotation { omega_dt, sigma_t }) })
    }

    pub fn is_identity(&self) -> bool {
        self.lambda1 == 0.0 && self.lambda2 == 0.0 && self.lambda3 == 0.0
    }
}

fn quadratic_phase(coords: &[f64], lambda: f64) -> Vec<C64> {
    coords.iter().map(|x| C64::from_polar(1.0, -lambda * x * x)).collect()
}

/// Multiply by `e^{-i lambda k^2}` on every photon.
pub fn apply_quadratic_spectral_phase<S: PhotonState>(state: S, lambda: f64) -> Result<S> {
    state.expect_domain(Domain::Frequency)?;
    if lambda == 0.0 {
        return Ok(state);
    }
    let f = quadratic_phase(&state.grid().momenta(), lambda);
    Ok(state.apply_per_photon(&f))
}

/// Multiply by `e^{-i lambda2 t^2}` on every photon, on the centered time
/// lattice. Fails if the state reaches the periodic seam of the window.
pub fn apply_quadratic_temporal_phase<S: PhotonState>(state: S, lambda2: f64) -> Result<S> {
    state.expect_domain(Domain::Time)?;
    if lambda2 == 0.0 {
        return Ok(state);
    }
    let leaked = state.edge_weight() / state.norm_sq();
    if leaked > WINDOW_GUARD {
        return Err(Error::WindowLeak { leaked });
    }
    let f = quadratic_phase(&state.grid().times(), lambda2);
    Ok(state.apply_per_photon(&f))
}

/// Spectral(`lambda1`), temporal(`lambda2`), spectral(`lambda3`); enters and
/// leaves in the frequency domain.
pub fn apply_trap<S: PhotonState>(state: S, trap: &TrapParams) -> Result<S> {
    state.expect_domain(Domain::Frequency)?;
    let s = apply_quadratic_spectral_phase(state, trap.lambda1)?;
    let s = if trap.lambda2 == 0.0 {
        s
    } else {
        apply_quadratic_temporal_phase(s.to_time()?, trap.lambda2)?.to_frequency()?
    };
    apply_quadratic_spectral_phase(s, trap.lambda3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use crate::state::{OnePhotonState, TwoPhotonState};

    fn grid() -> SpectralGrid {
        SpectralGrid::new(1024, 16.0).unwrap()
    }

    #[test]
    fn rotation_coefficients() {
        let t = TrapParams::from_rotation(1e-12, 1.0).unwrap();
        assert!(t.lambda1.abs() < 1e-12 && t.lambda2.abs() < 1e-12 && t.lambda3 == t.lambda1);
        let t = TrapParams::from_rotation(std::f64::consts::FRAC_PI_2, 1.0).unwrap();
        assert!((t.lambda1 - 0.5).abs() < 1e-15);
        assert!((t.lambda2 - 0.5).abs() < 1e-15);
        assert!(TrapParams::from_rotation(std::f64::consts::PI, 1.0).is_err());
        assert!(TrapParams::from_rotation(-4.0, 1.0).is_err());
        assert!(TrapParams::from_rotation(1.0, 0.0).is_err());
    }

    #[test]
    fn rotation_identities() {
        for &(w, s) in &[(0.3, 1.0), (1.0, 0.7), (-2.5, 2.0), (3.0, 1.3)] {
            let t = TrapParams::from_rotation(w, s).unwrap();
            let (l1, l2, l3) = (t.lambda1, t.lambda2, t.lambda3);
            assert!((1.0 - 4.0 * l2 * l3 - w.cos()).abs() < 1e-12);
            assert!((1.0 - 4.0 * l2 * l1 - w.cos()).abs() < 1e-12);
            assert!((2.0 * l2 - w.sin() / (s * s)).abs() < 1e-12);
            assert!((2.0 * (l3 + l1 * (1.0 - 4.0 * l2 * l3)) - w.sin() * s * s).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_phases_are_identity() {
        let phi = OnePhotonState::gaussian(grid(), 1.0, 0.0).unwrap();
        assert_eq!(apply_quadratic_spectral_phase(phi.clone(), 0.0).unwrap(), phi);
        let t = phi.clone().to_time().unwrap();
        assert_eq!(apply_quadratic_temporal_phase(t.clone(), 0.0).unwrap(), t);
        assert!(apply_quadratic_temporal_phase(phi.clone(), 0.3).is_err());
        assert!(apply_quadratic_spectral_phase(t, 0.3).is_err());
    }

    #[test]
    fn phases_preserve_norm() {
        let phi = OnePhotonState::gaussian(grid(), 1.0, 0.0).unwrap();
        let a = apply_quadratic_spectral_phase(phi.clone(), 0.8).unwrap();
        assert!((a.norm_sq() - 1.0).abs() < 1e-12);
        let b = apply_quadratic_temporal_phase(phi.to_time().unwrap(), 0.8).unwrap();
        assert!((b.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_chirp_broadens_in_time() {
        let (sigma, lambda) = (1.0_f64, 1.0_f64);
        let phi = OnePhotonState::gaussian(grid(), sigma, 0.0).unwrap();
        let w0 = phi.clone().to_time().unwrap().rms_width();
        let w1 = apply_quadratic_spectral_phase(phi, lambda).unwrap().to_time().unwrap().rms_width();
        let expect = (1.0 + 4.0 * lambda * lambda * sigma.powi(4)).sqrt();
        assert!((w1 / w0 - expect).abs() < 1e-6, "{} vs {expect}", w1 / w0);
    }

    #[test]
    fn temporal_chirp_broadens_in_frequency() {
        let (sigma_k, lambda2) = (1.0_f64, 0.6_f64);
        let sigma_t = 1.0 / sigma_k;
        let phi = OnePhotonState::gaussian(grid(), sigma_k, 0.0).unwrap();
        let w0 = phi.rms_width();
        let chirped = apply_quadratic_temporal_phase(phi.to_time().unwrap(), lambda2).unwrap();
        let w1 = chirped.to_frequency().unwrap().rms_width();
        let expect = (1.0 + 4.0 * lambda2 * lambda2 * sigma_t.powi(4)).sqrt();
        assert!((w1 / w0 - expect).abs() < 1e-6, "{} vs {expect}", w1 / w0);
    }

    #[test]
    fn spectral_phases_compose_additively() {
        let phi = OnePhotonState::gaussian(grid(), 1.2, 0.1).unwrap();
        let ab = apply_quadratic_spectral_phase(apply_quadratic_spectral_phase(phi.clone(), 0.3).unwrap(), -0.7).unwrap();
        let sum = apply_quadratic_spectral_phase(phi, -0.4).unwrap();
        for (x, y) in ab.amps().iter().zip(sum.amps()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn matched_ground_state_is_invariant() {
        let sigma_t = 1.0;
        let trap = TrapParams::from_rotation(1.0, sigma_t).unwrap();
        let phi = OnePhotonState::gaussian(grid(), 1.0 / sigma_t, 0.0).unwrap();
        let out = apply_trap(phi.clone(), &trap).unwrap();
        let ov = phi.inner(&out).unwrap().norm();
        assert!(ov >= 1.0 - 1e-6, "{ov}");
    }

    #[test]
    fn mismatched_gaussian_is_not_invariant() {
        let sigma_t = 1.0;
        let trap = TrapParams::from_rotation(1.0, sigma_t).unwrap();
        let phi = OnePhotonState::gaussian(grid(), 2.0 / sigma_t, 0.0).unwrap();
        let out = apply_trap(phi.clone(), &trap).unwrap();
        let ov = phi.inner(&out).unwrap().norm();
        assert!(ov < 1.0 - 1e-3, "{ov}");
    }

    #[test]
    fn four_quarter_turns_close_the_orbit() {
        let trap = TrapParams::from_rotation(std::f64::consts::FRAC_PI_2, 1.0).unwrap();
        let phi = OnePhotonState::gaussian(grid(), 1.7, 0.4).unwrap();
        let mut s = phi.clone();
        for _ in 0..4 {
            s = apply_trap(s, &trap).unwrap();
        }
        let f = phi.inner(&s).unwrap().norm_sqr();
        assert!(f >= 1.0 - 1e-5, "{f}");
    }

    #[test]
    fn centroid_rotates_in_phase_space() {
        // Heisenberg evolution t' = t cos w + s^2 p sin w with p = -k under the
        // e^{-ikt} kernel used for the time domain.
        let g = grid();
        let sigma_t = 1.0;
        let w = 0.8_f64;
        let trap = TrapParams::from_rotation(w, sigma_t).unwrap();
        // displaced coherent state: shift in time via a linear spectral phase
        let t0 = 1.5;
        let phi = OnePhotonState::gaussian(g, 1.0 / sigma_t, 0.9).unwrap();
        let shift: Vec<C64> = g.momenta().iter().map(|k| C64::from_polar(1.0, k * t0)).collect();
        let phi = phi.apply_per_photon(&shift);
        let t_in = phi.clone().to_time().unwrap().centroid();
        let k_in = phi.centroid();
        let out = apply_trap(phi, &trap).unwrap();
        let t_out = out.clone().to_time().unwrap().centroid();
        let k_out = out.centroid();
        let p_in = -k_in;
        let t_exp = t_in * w.cos() + sigma_t * sigma_t * p_in * w.sin();
        let p_exp = -t_in * w.sin() / (sigma_t * sigma_t) + p_in * w.cos();
        let scale = (t_in * t_in + p_in * p_in).sqrt();
        assert!((t_out - t_exp).abs() < 1e-3 * scale, "{t_out} {t_exp}");
        assert!((-k_out - p_exp).abs() < 1e-3 * scale, "{} {p_exp}", -k_out);
    }

    #[test]
    fn pair_trap_matches_product_of_single_traps() {
        let g = SpectralGrid::new(128, 8.0).unwrap();
        let trap = TrapParams::symmetric(0.3, 0.4);
        let phi = OnePhotonState::gaussian(g, 1.1, 0.0).unwrap();
        let pair = apply_trap(TwoPhotonState::product(&phi), &trap).unwrap();
        let single = apply_trap(phi, &trap).unwrap();
        let expect = TwoPhotonState::product(&single);
        assert!(pair.distance(&expect).unwrap() < 1e-12);
        assert_eq!(pair.symmetry_defect(), 0.0);
    }

    #[test]
    fn seam_guard_trips_on_edge_content() {
        let g = SpectralGrid::new(64, 8.0).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); 64];
        amps[1] = C64::new(g.dt().sqrt().recip(), 0.0);
        let t = OnePhotonState::new(g, amps, Domain::Time).unwrap();
        assert!(matches!(apply_quadratic_temporal_phase(t, 0.1), Err(Error::WindowLeak { .. })));
    }
}
