//! N-round scatter + trap loop and the circuit-level figures of merit.
//!
//! Every round applies, to the single photon and to the pair alike:
//! scatter, delay compensation, then (except after the last scattering) the
//! trap with the emitter's quadratic phase folded into its first spectral
//! element.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::scattering::{alpha_coefficients, compensation_factors, DispersionOrder, LatticeRule, ScatterKernel, TAPER_START};
use crate::state::{Domain, OnePhotonState, PhotonState, TwoPhotonState};
use crate::trap::{apply_trap, TrapParams};

/// Input Gaussian `(sigma_k, k0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub sigma_k: f64,
    pub k0: f64,
}

/// Which dispersion terms of the emitter response are undone each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Compensation {
    /// Remove the group delay (`alpha1`).
    pub delay: bool,
    /// Fold the quadratic phase (`alpha2`) into the trap. Without a trap
    /// there is nothing to absorb it and the flag has no effect.
    pub chirp: bool,
}

impl Default for Compensation {
    fn default() -> Self {
        Self { delay: true, chirp: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub grid: SpectralGrid,
    pub n_rounds: usize,
    pub kernel: ScatterKernel,
    pub trap: Option<TrapParams>,
    pub compensation: Compensation,
    pub input: PulseSpec,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidParameter("cascade needs at least one round".into()));
        }
        self.validate_parameters()
    }

    fn validate_parameters(&self) -> Result<()> {
        // the unitary rule tapers the correlated term above TAPER_START; the
        // pulse itself must sit below that
        if self.kernel.rule == LatticeRule::Unitary {
            let open = TAPER_START * self.grid.k_max();
            let PulseSpec { sigma_k, k0 } = self.input;
            if k0.abs() + 4.0 * sigma_k > open {
                return Err(Error::Coverage { sigma_k, k0, k_max: open });
            }
        }
        if let Some(t) = &self.trap {
            if ![t.lambda1, t.lambda2, t.lambda3].iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidParameter("trap coefficients must be finite".into()));
            }
            if let Some(r) = t.rotation {
                TrapParams::from_rotation(r.omega_dt, r.sigma_t)?;
            }
        }
        Ok(())
    }

    pub fn input_photon(&self) -> Result<OnePhotonState> {
        OnePhotonState::gaussian(self.grid, self.input.sigma_k, self.input.k0)
    }

    /// Trap actually applied between scatterings, with the emitter's
    /// quadratic phase absorbed into the first spectral element.
    pub fn effective_trap(&self) -> Option<TrapParams> {
        self.trap.map(|t| {
            if self.compensation.chirp {
                let (_, a2) = alpha_coefficients(&self.kernel.emitter);
                TrapParams { lambda1: t.lambda1 + a2.im, ..t }
            } else {
                t
            }
        })
    }
}

/// Scattering step common to one- and two-photon states.
pub trait Scatter: PhotonState {
    fn scatter(self, kernel: &ScatterKernel) -> Result<Self>;
}

impl Scatter for OnePhotonState {
    fn scatter(self, kernel: &ScatterKernel) -> Result<Self> {
        kernel.scatter_one_photon(self)
    }
}

impl Scatter for TwoPhotonState {
    fn scatter(self, kernel: &ScatterKernel) -> Result<Self> {
        kernel.scatter_two_photon(self)
    }
}

/// Precomputed per-round linear optics.
struct RoundPlan {
    delay: Option<Vec<C64>>,
    trap: Option<TrapParams>,
}

impl RoundPlan {
    fn new(config: &CascadeConfig) -> Self {
        let emitter = &config.kernel.emitter;
        let delay = config
            .compensation
            .delay
            .then(|| compensation_factors(&config.grid, emitter, DispersionOrder::First));
        Self { delay, trap: config.effective_trap() }
    }

    fn advance<S: Scatter>(&self, state: S, kernel: &ScatterKernel, last: bool) -> Result<S> {
        let mut s = state.scatter(kernel)?;
        if let Some(d) = &self.delay {
            s = s.apply_per_photon(d);
        }
        match (&self.trap, last) {
            (Some(trap), false) => apply_trap(s, trap),
            _ => Ok(s),
        }
    }
}

fn run_rounds<S: Scatter>(config: &CascadeConfig, mut state: S, mut each: impl FnMut(&S)) -> Result<S> {
    config.validate_parameters()?;
    let plan = RoundPlan::new(config);
    for r in 0..config.n_rounds {
        state = plan.advance(state, &config.kernel, r + 1 == config.n_rounds)?;
        each(&state);
    }
    Ok(state)
}

/// Reference single-photon mode after all rounds. `n_rounds = 0` returns the
/// input unchanged.
pub fn cascade_one_photon(config: &CascadeConfig) -> Result<OnePhotonState> {
    run_rounds(config, config.input_photon()?, |_| {})
}

pub fn cascade_two_photon(config: &CascadeConfig) -> Result<TwoPhotonState> {
    let psi = TwoPhotonState::product(&config.input_photon()?);
    run_rounds(config, psi, |_| {})
}

/// `O = sum_ij conj(Phi_i) conj(Phi_j) Psi_ij dk^2`.
pub fn overlap(phi: &OnePhotonState, psi: &TwoPhotonState) -> Result<C64> {
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    phi.expect_domain(Domain::Frequency)?;
    psi.expect_domain(Domain::Frequency)?;
    let m = phi.grid().m();
    let dk = phi.grid().dk();
    let a = phi.amps();
    // rows in parallel, reduced in a fixed order
    let rows: Vec<C64> = psi
        .amps()
        .par_chunks(m)
        .zip(a.par_iter())
        .map(|(row, ai)| {
            let inner: C64 = row.iter().zip(a).map(|(x, aj)| aj.conj() * x).sum();
            ai.conj() * inner
        })
        .collect();
    let s: C64 = rows.iter().sum();
    Ok(s * dk * dk)
}

/// Choi-Jamiolkowski fidelity of the CZ circuit, `|3/4 - O/4|^2`.
pub fn cz_fidelity(overlap: C64) -> f64 {
    (C64::new(0.75, 0.0) - overlap / 4.0).norm_sqr()
}

/// Bell-analyzer success probability with one sorter, `3/4 - Re(O)/4`.
pub fn sorter_success(overlap: C64) -> f64 {
    0.75 - overlap.re / 4.0
}

/// Photon sorter output: the pair leaves as `(1/sqrt 2) \int f a^dag a^dag`
/// in each port, `f_a = (Phi Phi + Psi)/2`, `f_b = (Psi - Phi Phi)/2`.
#[derive(Debug, Clone)]
pub struct SorterOutput {
    pub a_branch: TwoPhotonState,
    pub b_branch: TwoPhotonState,
    pub a_weight: f64,
    pub b_weight: f64,
}

impl SorterOutput {
    /// Half of the Bell states (one photon per sorter) always succeed; the
    /// bunched half succeeds when the pair exits port b.
    pub fn bell_success(&self) -> f64 {
        0.5 + 0.5 * self.b_weight
    }
}

pub fn assemble_sorter_output(phi: &OnePhotonState, psi: &TwoPhotonState) -> Result<SorterOutput> {
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    if phi.domain() != psi.domain() {
        return Err(Error::DomainMismatch { expected: phi.domain(), found: psi.domain() });
    }
    let ideal = TwoPhotonState::product(phi);
    let (a, b) = split_ports(&ideal, psi);
    let a_weight = a.norm_sq();
    let b_weight = b.norm_sq();
    Ok(SorterOutput { a_branch: a, b_branch: b, a_weight, b_weight })
}

fn split_ports(linear: &TwoPhotonState, nonlinear: &TwoPhotonState) -> (TwoPhotonState, TwoPhotonState) {
    let grid = *linear.grid();
    let (a, b): (Vec<C64>, Vec<C64>) = linear
        .amps()
        .par_iter()
        .zip(nonlinear.amps().par_iter())
        .map(|(l, n)| (0.5 * (n + l), 0.5 * (n - l)))
        .unzip();
    (
        TwoPhotonState::from_raw(grid, a, linear.domain()),
        TwoPhotonState::from_raw(grid, b, linear.domain()),
    )
}

/// Sorter layout without a trap: `n_rounds` sorter stages with one
/// scattering each; a pair leaving port a is fed to the next stage. Returns
/// the probability that the bunched Bell states are still unresolved after
/// the last stage, i.e. the weight left in port a.
pub fn repeated_sorter_residual(config: &CascadeConfig) -> Result<f64> {
    config.validate()?;
    let single = CascadeConfig { n_rounds: 1, trap: None, ..config.clone() };
    let plan = RoundPlan::new(&single);
    let kernel = &config.kernel;
    let mut pair = TwoPhotonState::product(&config.input_photon()?);
    for _ in 0..config.n_rounds {
        let nonlinear = plan.advance(pair.clone(), kernel, true)?;
        let linear = linear_pair_step(&plan, pair, kernel)?;
        pair = split_ports(&linear, &nonlinear).0;
    }
    Ok(pair.norm_sq())
}

fn linear_pair_step(plan: &RoundPlan, pair: TwoPhotonState, kernel: &ScatterKernel) -> Result<TwoPhotonState> {
    let free = ScatterKernel { bound_constant: C64::new(0.0, 0.0), ..*kernel };
    plan.advance(pair, &free, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub overlap: C64,
    pub fidelity: f64,
    pub p_success: f64,
    pub p_fail: f64,
    /// `max |1 - ||state|||` over rounds and over both states.
    pub norm_drift: f64,
    /// `arg <phi_in|Phi>`.
    pub linear_phase: f64,
    pub per_round_overlaps: Vec<C64>,
}

/// `O` after the full cascade, without diagnostics.
pub fn final_overlap(config: &CascadeConfig) -> Result<C64> {
    config.validate()?;
    let phi = cascade_one_photon(config)?;
    let psi = cascade_two_photon(config)?;
    overlap(&phi, &psi)
}

/// Runs both cascades in lockstep.
///
/// Without a trap the Bell-analyzer numbers refer to the repeated-stage
/// sorter ([`repeated_sorter_residual`]); with a trap to a single sorter
/// around the full cascade.
pub fn simulate(config: &CascadeConfig) -> Result<MetricsReport> {
    config.validate()?;
    let phi_in = config.input_photon()?;
    let mut drift = 0.0_f64;
    let mut phis = Vec::with_capacity(config.n_rounds);
    let phi = run_rounds(config, phi_in.clone(), |s| {
        drift = drift.max((1.0 - s.norm_sq().sqrt()).abs());
        phis.push(s.clone());
    })?;
    let mut per_round = Vec::with_capacity(config.n_rounds);
    let mut round = 0;
    let mut failure = None;
    let psi = run_rounds(config, TwoPhotonState::product(&phi_in), |s| {
        drift = drift.max((1.0 - s.norm_sq().sqrt()).abs());
        match overlap(&phis[round], s) {
            Ok(o) => per_round.push(o),
            Err(e) => failure = Some(e),
        }
        round += 1;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let o = overlap(&phi, &psi)?;
    let linear_phase = phi_in.inner(&phi)?.arg();
    let p_success = if config.trap.is_some() {
        sorter_success(o)
    } else {
        1.0 - 0.5 * repeated_sorter_residual(config)?
    };
    Ok(MetricsReport {
        overlap: o,
        fidelity: cz_fidelity(o),
        p_success,
        p_fail: 1.0 - p_success,
        norm_drift: drift,
        linear_phase,
        per_round_overlaps: per_round,
    })
}
