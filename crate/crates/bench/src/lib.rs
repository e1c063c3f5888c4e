//! Fixtures shared by the benchmarks.

use photon_gate::optimize::{cascade_config, KernelSpec, Params};
use photon_gate::{CascadeConfig, Compensation, OnePhotonState, SpectralGrid, TwoPhotonState};

/// Settings near the trap-on optimum at moderate N.
pub const NEAR_OPTIMUM: Params = Params { sigma_k: 0.43, delta: 0.75, lambda1: 2.26, lambda2: 0.09 };

pub fn grid(m: usize) -> SpectralGrid {
    SpectralGrid::new(m, 8.0).expect("valid lattice")
}

pub fn pair(m: usize) -> TwoPhotonState {
    TwoPhotonState::product(&OnePhotonState::gaussian(grid(m), NEAR_OPTIMUM.sigma_k, 0.0).expect("pulse fits"))
}

pub fn cascade(n: usize, m: usize, trap: bool) -> CascadeConfig {
    cascade_config(n, trap, &NEAR_OPTIMUM, grid(m), &KernelSpec::default(), Compensation::default(), 0.0).expect("valid cascade")
}
