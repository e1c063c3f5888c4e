//! Scattering off a two-level emitter in a chiral waveguide.
//!
//! One photon picks up the unimodular transmission
//! `T(k) = (k - D - i G/2) / (k - D + i G/2)`. A pair is mapped to
//! `T(k) T(p) psi(k, p) + Psi_B(k, p)` where the correlated part lives on the
//! energy shell `E = k + p`:
//!
//! ```text
//! Psi_B(k, p) = C f(E) s(k) s(p) I(E),   s(x) = 1 / (x - D + i G/2),
//! I(E)        = sum_q s(q) s(E - q) psi(q, E - q) dk.
//! ```
//!
//! `f(E) = E - 2D + iG` for the full two-level response ([`ShellFactor::Pole`])
//! and `f = 1` for the bare four-Lorentzian ansatz ([`ShellFactor::Flat`]).
//! With the pole factor the continuum map is unitary for `C = i G^2 / (2 pi)`,
//! the value used before calibration.
//!
//! On each shell the correlated term is a rank-one update
//! `D (1 + beta w w^dag)` of the diagonal `D = T(k) T(p)`, with
//! `w(q) = conj(s(q) s(E - q))`. Truncating `w`, whose tail only falls off as
//! `1/q^2`, at the window edge costs norm (`~ k_max^-3` per scattering) and
//! leaves a jump at the periodic seam that spreads over the whole time
//! window. [`LatticeRule::Unitary`] instead rolls `w` smoothly to zero inside
//! the window and rescales the shell sum by `|w|^2_continuum / |w|^2_lattice`,
//! which makes every shell block exactly unitary with the continuum
//! eigenphase `(E - 2D + iG) / (E - 2D - iG)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::state::{Domain, OnePhotonState, PhotonState, TwoPhotonState};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Emitter decay rate `gamma` and detuning `delta` of the pulse carrier from
/// the emitter transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    pub gamma: f64,
    pub delta: f64,
}

impl EmitterParams {
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rate must be positive, got {gamma}")));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("detuning must be finite, got {delta}")));
        }
        Ok(Self { gamma, delta })
    }

    /// Unit decay rate.
    pub fn with_detuning(delta: f64) -> Self {
        Self { gamma: 1.0, delta }
    }

    #[inline]
    fn resolvent(&self, x: f64) -> C64 {
        C64::new(x - self.delta, 0.5 * self.gamma).inv()
    }
}

pub fn transmission(k: f64, emitter: &EmitterParams) -> C64 {
    let half = 0.5 * emitter.gamma;
    C64::new(k - emitter.delta, -half) / C64::new(k - emitter.delta, half)
}

/// Energy dependence of the correlated term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShellFactor {
    /// `f(E) = E - 2 delta + i gamma`.
    #[default]
    Pole,
    /// `f(E) = 1`.
    Flat,
}

impl ShellFactor {
    #[inline]
    fn eval(self, energy: f64, emitter: &EmitterParams) -> C64 {
        match self {
            ShellFactor::Pole => C64::new(energy - 2.0 * emitter.delta, emitter.gamma),
            ShellFactor::Flat => C64::new(1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShellFactor::Pole => "pole",
            ShellFactor::Flat => "flat",
        }
    }
}

/// How the shell sum is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatticeRule {
    /// Plain lattice sum over the full window.
    Truncated,
    /// Tapered, norm-matched shell (see module docs).
    #[default]
    Unitary,
}

impl LatticeRule {
    pub fn name(self) -> &'static str {
        match self {
            LatticeRule::Truncated => "truncated",
            LatticeRule::Unitary => "unitary",
        }
    }
}

/// Fractions of `k_max` between which the correlated term is rolled off.
pub const TAPER_START: f64 = 0.45;
pub const TAPER_END: f64 = 0.7;

/// `1` for `|k| <= TAPER_START k_max`, `0` beyond `TAPER_END k_max`, smooth
/// (all derivatives continuous) in between.
pub fn shell_taper(k: f64, k_max: f64) -> f64 {
    let x = (k.abs() / k_max - TAPER_START) / (TAPER_END - TAPER_START);
    if x <= 0.0 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let bump = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let a = bump(1.0 - x);
    a / (a + bump(x))
}

/// `int |s(q) s(E - q)|^2 dq = 4 pi / (G ((E - 2D)^2 + G^2))`.
fn continuum_shell_norm(energy: f64, emitter: &EmitterParams) -> f64 {
    let x = energy - 2.0 * emitter.delta;
    4.0 * PI / (emitter.gamma * (x * x + emitter.gamma * emitter.gamma))
}

/// Two-photon scattering kernel: emitter, correlated-term constant, its
/// energy-shell form and the lattice rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterKernel {
    pub emitter: EmitterParams,
    pub bound_constant: C64,
    pub shell: ShellFactor,
    pub rule: LatticeRule,
}

impl ScatterKernel {
    /// Pole shell factor with the unitary constant `i gamma^2 / (2 pi)`.
    pub fn new(emitter: EmitterParams) -> Self {
        Self::with_constant(emitter, unitary_bound_constant(emitter.gamma), ShellFactor::Pole)
    }

    pub fn with_constant(emitter: EmitterParams, bound_constant: C64, shell: ShellFactor) -> Self {
        Self { emitter, bound_constant, shell, rule: LatticeRule::default() }
    }

    pub fn with_rule(self, rule: LatticeRule) -> Self {
        Self { rule, ..self }
    }

    /// Same kernel with the correlated term removed.
    pub fn linear_only(emitter: EmitterParams) -> Self {
        Self::with_constant(emitter, C64::new(0.0, 0.0), ShellFactor::Pole)
    }

    pub fn transmissions(&self, grid: &SpectralGrid) -> Vec<C64> {
        grid.momenta().into_iter().map(|k| transmission(k, &self.emitter)).collect()
    }

    pub fn scatter_one_photon(&self, phi: OnePhotonState) -> Result<OnePhotonState> {
        phi.expect_domain(Domain::Frequency)?;
        let t = self.transmissions(phi.grid());
        Ok(phi.apply_per_photon(&t))
    }

    pub fn scatter_two_photon(&self, psi: TwoPhotonState) -> Result<TwoPhotonState> {
        let bound = if self.bound_constant == C64::new(0.0, 0.0) {
            None
        } else {
            Some(self.unit_bound_part(&psi)?)
        };
        let t = self.transmissions(psi.grid());
        let mut out = psi.apply_per_photon(&t);
        if let Some(b) = bound {
            let c = self.bound_constant;
            out.amps_mut()
                .par_iter_mut()
                .zip(b.amps().par_iter())
                .for_each(|(o, x)| *o += c * x);
        }
        out.symmetrized()
    }

    /// `Psi_B` evaluated with `C = 1`.
    ///
    /// The energy-shell sums are accumulated row by row in increasing row
    /// index, so the result is bitwise reproducible.
    pub fn unit_bound_part(&self, psi: &TwoPhotonState) -> Result<TwoPhotonState> {
        psi.expect_domain(Domain::Frequency)?;
        let defect = psi.symmetry_defect();
        if defect > crate::state::SYMMETRY_TOL {
            return Err(Error::Asymmetric(defect));
        }
        let grid = *psi.grid();
        let m = grid.m();
        let dk = grid.dk();
        let s: Vec<C64> = grid
            .momenta()
            .into_iter()
            .map(|k| match self.rule {
                LatticeRule::Truncated => self.emitter.resolvent(k),
                LatticeRule::Unitary => self.emitter.resolvent(k) * shell_taper(k, grid.k_max()),
            })
            .collect();
        let amps = psi.amps();

        let mut shell = vec![C64::new(0.0, 0.0); 2 * m - 1];
        for i in 0..m {
            let row = &amps[i * m..(i + 1) * m];
            let si = s[i];
            for (j, (x, sj)) in row.iter().zip(&s).enumerate() {
                shell[i + j] += si * sj * x;
            }
        }
        let rescale = match self.rule {
            LatticeRule::Truncated => None,
            LatticeRule::Unitary => Some(self.lattice_shell_norms(&s, dk)),
        };
        for (n, v) in shell.iter_mut().enumerate() {
            let energy = grid.pair_energy(n);
            let mut f = dk * self.shell.eval(energy, &self.emitter);
            if let Some(norms) = &rescale {
                // shells whose kernel is tapered away entirely stay diagonal
                let cont = continuum_shell_norm(energy, &self.emitter);
                f *= if norms[n] > 1e-12 * cont { cont / norms[n] } else { 0.0 };
            }
            *v *= f;
        }

        let mut out = vec![C64::new(0.0, 0.0); m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let si = s[i];
            for (j, o) in row.iter_mut().enumerate() {
                *o = (si * s[j]) * shell[i + j];
            }
        });
        Ok(TwoPhotonState::from_raw(grid, out, Domain::Frequency))
    }
}

impl ScatterKernel {
    /// `sum_{i + j = n} |w_i w_j|^2 dk` for every shell `n`.
    fn lattice_shell_norms(&self, w: &[C64], dk: f64) -> Vec<f64> {
        let m = w.len();
        let a: Vec<f64> = w.iter().map(|x| x.norm_sqr()).collect();
        let mut norms = vec![0.0; 2 * m - 1];
        for (i, ai) in a.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                norms[i + j] += ai * aj;
            }
        }
        norms.iter_mut().for_each(|x| *x *= dk);
        norms
    }
}

/// `C = i gamma^2 / (2 pi)`.
pub fn unitary_bound_constant(gamma: f64) -> C64 {
    I * gamma * gamma / (2.0 * PI)
}

/// Second-order expansion `log T(k) ~ alpha1 k + alpha2 k^2` around the
/// carrier. Both coefficients are purely imaginary for real detuning.
pub fn alpha_coefficients(emitter: &EmitterParams) -> (C64, C64) {
    let g = C64::new(emitter.gamma, 0.0);
    let lo = C64::new(2.0 * emitter.delta, -emitter.gamma);
    let hi = C64::new(2.0 * emitter.delta, emitter.gamma);
    let alpha1 = 4.0 * I * g / (lo * hi);
    let alpha2 = 16.0 * I * g * emitter.delta / (lo * lo * hi * hi);
    assert!(
        alpha1.re.abs() <= 1e-12 * alpha1.norm().max(1.0) && alpha2.re.abs() <= 1e-12 * alpha2.norm().max(1.0),
        "dispersion coefficients must be imaginary for real detuning"
    );
    (alpha1, alpha2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionOrder {
    /// `e^{-alpha1 k}`: undo the scattering delay.
    First,
    /// `e^{-alpha2 k^2}`: undo the quadratic spectral phase.
    Second,
}

pub fn compensation_factors(grid: &SpectralGrid, emitter: &EmitterParams, order: DispersionOrder) -> Vec<C64> {
    let (a1, a2) = alpha_coefficients(emitter);
    grid.momenta()
        .into_iter()
        .map(|k| match order {
            DispersionOrder::First => (-a1 * k).exp(),
            DispersionOrder::Second => (-a2 * k * k).exp(),
        })
        .collect()
}

pub fn compensate_dispersion<S: PhotonState>(state: S, emitter: &EmitterParams, order: DispersionOrder) -> Result<S> {
    state.expect_domain(Domain::Frequency)?;
    let f = compensation_factors(state.grid(), emitter, order);
    Ok(state.apply_per_photon(&f))
}
