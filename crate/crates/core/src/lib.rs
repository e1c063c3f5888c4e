//! Cascaded scattering of one- and two-photon pulses off a single two-level
//! emitter in a chiral waveguide, with a harmonic temporal trap between
//! scatterings. Frequencies are measured in units of the emitter decay rate.

pub mod cascade;
pub mod error;
mod fourier;
pub mod grid;
pub mod optimize;
pub mod oracle;
pub mod scattering;
pub mod state;
pub mod trap;

pub use cascade::{CascadeConfig, Compensation, MetricsReport, PulseSpec};
pub use error::{Error, Result};
pub use grid::SpectralGrid;
pub use scattering::{EmitterParams, LatticeRule, ScatterKernel, ShellFactor};
pub use state::{Domain, OnePhotonState, PhotonState, TwoPhotonState};
pub use trap::TrapParams;
