//! Virtual input cavity feeding the emitter, integrated as a master equation.
//!
//! Basis `|n, s>` with cavity photon number `n = 0, 1, 2` and emitter state
//! `s = g, e`, flattened as `2 n + s`. The cavity releases the pulse mode
//! `u(t)` when coupled with `g_u = conj(u) / sqrt(int_t^inf |u|^2)`; the
//! cascade gives
//!
//! ```text
//! H = D s+ s- + (i/2) sqrt(G) (g_u a^dag s- - conj(g_u) s+ a),
//! L = conj(g_u) a + sqrt(G) s-,
//! ```
//!
//! and `L` is the field on the waveguide downstream of the emitter.

use std::f64::consts::PI;

use nalgebra::Matrix6;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::scattering::EmitterParams;
use crate::state::{Domain, OnePhotonState};

pub(crate) type Op = Matrix6<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub(crate) fn index(n: usize, excited: bool) -> usize {
    2 * n + excited as usize
}

fn annihilation() -> Op {
    let mut a = Op::zeros();
    for n in 1..3 {
        for s in [false, true] {
            a[(index(n - 1, s), index(n, s))] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    a
}

fn lowering() -> Op {
    let mut s = Op::zeros();
    for n in 0..3 {
        s[(index(n, false), index(n, true))] = ONE;
    }
    s
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Upper bound on the RK4 step, in units of `1/G`.
    pub max_step: f64,
    /// Remaining pulse norm below which `g_u` is frozen.
    pub depletion_guard: f64,
    /// Re-run with half the step and fail if the output moves by more.
    pub convergence_tol: Option<f64>,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { max_step: 1e-2, depletion_guard: 1e-8, convergence_tol: None }
    }
}

/// Pulse mode sampled at every RK4 node (lattice steps split into `substeps`
/// pieces, each sampled at both ends and the midpoint).
pub(crate) struct Coupling {
    grid: SpectralGrid,
    pub(crate) substeps: usize,
    /// `g_u` at times `-t_max + s h / 2`.
    g: Vec<C64>,
    /// Pulse norm released before each half-step node.
    released: Vec<f64>,
}

impl Coupling {
    pub(crate) fn new(mode: &OnePhotonState, emitter: &EmitterParams, settings: &OracleSettings) -> Result<Self> {
        mode.expect_domain(Domain::Frequency)?;
        if !(settings.max_step > 0.0) {
            return Err(Error::InvalidParameter("oracle step must be positive".into()));
        }
        let grid = *mode.grid();
        let substeps = (grid.dt() / (settings.max_step / emitter.gamma)).ceil().max(1.0) as usize;
        let nodes = 2 * grid.m() * substeps + 1;
        let half = grid.dt() / (2 * substeps) as f64;

        // band-limited interpolation of the lattice pulse
        let norm = grid.dk() / (2.0 * PI).sqrt();
        let ks = grid.momenta();
        let u: Vec<C64> = (0..nodes)
            .map(|s| {
                let t = -grid.t_max() + s as f64 * half;
                ks.iter().zip(mode.amps()).map(|(k, a)| a * C64::from_polar(1.0, -k * t)).sum::<C64>() * norm
            })
            .collect();

        // remaining norm, accumulated backwards so the tail keeps its
        // relative precision
        let mut remaining = vec![0.0; nodes];
        for s in (0..nodes - 1).rev() {
            remaining[s] = remaining[s + 1] + 0.5 * half * (u[s].norm_sqr() + u[s + 1].norm_sqr());
        }

        let mut g = vec![ZERO; nodes];
        let mut frozen = None;
        for s in 0..nodes {
            if frozen.is_none() && remaining[s] <= settings.depletion_guard {
                frozen = Some(if s > 0 { g[s - 1] } else { ZERO });
            }
            g[s] = match frozen {
                Some(f) => f,
                None => u[s].conj() / remaining[s].sqrt(),
            };
        }
        let total = remaining[0];
        let released = remaining.iter().map(|r| total - r).collect();
        Ok(Self { grid, substeps, g, released })
    }

    pub(crate) fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// RK4 step length.
    pub(crate) fn step(&self) -> f64 {
        self.grid.dt() / self.substeps as f64
    }

    /// `g_u` at half-step node `s`.
    #[inline]
    pub(crate) fn at(&self, s: usize) -> C64 {
        self.g[s]
    }

    /// Pulse norm that has entered the emitter by lattice time `j`.
    pub(crate) fn released(&self, j: usize) -> f64 {
        self.released[self.node(j)]
    }

    /// Half-step node of lattice time `j`.
    #[inline]
    pub(crate) fn node(&self, j: usize) -> usize {
        2 * self.substeps * j
    }
}

/// Time-dependent Lindbladian `dX/dt = A X + X A^dag + L X L^dag` with
/// `A = -i H - L^dag L / 2`.
pub(crate) struct Dynamics {
    a: Op,
    sigma: Op,
    /// `s+ s-`, `a^dag a` and `s+ a`.
    excited: Op,
    photons: Op,
    feed: Op,
    sqrt_gamma: f64,
    delta: f64,
}

impl Dynamics {
    pub(crate) fn new(emitter: &EmitterParams) -> Self {
        let a = annihilation();
        let sigma = lowering();
        Self {
            a,
            sigma,
            excited: sigma.adjoint() * sigma,
            photons: a.adjoint() * a,
            feed: sigma.adjoint() * a,
            sqrt_gamma: emitter.gamma.sqrt(),
            delta: emitter.delta,
        }
    }

    pub(crate) fn jump(&self, g: C64) -> Op {
        self.a * g.conj() + self.sigma * C64::new(self.sqrt_gamma, 0.0)
    }

    /// `(A, L)`. The exchange terms of `H` and of `L^dag L / 2` cancel on
    /// `a^dag s-` and add on `s+ a`, leaving
    /// `A = -(i D + G/2) s+ s- - sqrt(G) conj(g) s+ a - |g|^2 a^dag a / 2`.
    fn generator(&self, g: C64) -> (Op, Op) {
        let gamma = self.sqrt_gamma * self.sqrt_gamma;
        let a = self.excited * C64::new(-0.5 * gamma, -self.delta)
            + self.feed * (-self.sqrt_gamma * g.conj())
            + self.photons * C64::new(-0.5 * g.norm_sqr(), 0.0);
        (a, self.jump(g))
    }

    #[inline]
    fn rate(a: &Op, l: &Op, x: &Op) -> Op {
        a * x + x * a.adjoint() + l * x * l.adjoint()
    }

    /// One RK4 step from half-step node `s` to `s + 2`.
    pub(crate) fn rk4(&self, x: &Op, coupling: &Coupling, s: usize) -> Op {
        let h = coupling.step();
        let (a0, l0) = self.generator(coupling.at(s));
        let (a1, l1) = self.generator(coupling.at(s + 1));
        let (a2, l2) = self.generator(coupling.at(s + 2));
        let k1 = Self::rate(&a0, &l0, x);
        let k2 = Self::rate(&a1, &l1, &(x + k1 * C64::new(0.5 * h, 0.0)));
        let k3 = Self::rate(&a1, &l1, &(x + k2 * C64::new(0.5 * h, 0.0)));
        let k4 = Self::rate(&a2, &l2, &(x + k3 * C64::new(h, 0.0)));
        x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }

    /// Propagates across one lattice step starting at lattice time `j`.
    pub(crate) fn lattice_step(&self, x: &Op, coupling: &Coupling, j: usize) -> Op {
        let base = coupling.node(j);
        (0..coupling.substeps).fold(*x, |acc, n| self.rk4(&acc, coupling, base + 2 * n))
    }
}

/// `|psi><psi|` for `psi = (|0, g> + |n_u, g>) / sqrt 2`.
pub(crate) fn coherent_pair_start(n: usize) -> Op {
    let mut rho = Op::zeros();
    for &i in &[index(0, false), index(n, false)] {
        for &j in &[index(0, false), index(n, false)] {
            rho[(i, j)] = C64::new(0.5, 0.0);
        }
    }
    rho
}

/// Output photon after one scattering, from `2 tr[L(t) rho(t)]`.
pub fn oracle_scatter_one_photon(
    phi: &OnePhotonState,
    emitter: &EmitterParams,
    settings: &OracleSettings,
) -> Result<OnePhotonState> {
    let run = |settings: &OracleSettings| -> Result<Vec<C64>> {
        let coupling = Coupling::new(phi, emitter, settings)?;
        let dynamics = Dynamics::new(emitter);
        let m = coupling.grid().m();
        let mut rho = coherent_pair_start(1);
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let l = dynamics.jump(coupling.at(coupling.node(j)));
            out.push((l * rho).trace() * 2.0);
            rho = dynamics.lattice_step(&rho, &coupling, j);
        }
        Ok(out)
    };
    let out = run(settings)?;
    if let Some(tol) = settings.convergence_tol {
        let fine = run(&OracleSettings { max_step: 0.5 * settings.max_step, ..*settings })?;
        super::assert_converged(&out, &fine, phi.grid().dt(), tol)?;
    }
    OnePhotonState::from_raw(*phi.grid(), out, Domain::Time).to_frequency()
}
