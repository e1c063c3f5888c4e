use thiserror::Error;

use crate::state::Domain;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid point count {0} must be a power of two and at least 8")]
    GridSize(usize),
    #[error("grid half-width must be positive and finite, got {0}")]
    GridWidth(f64),
    #[error("states live on different grids")]
    GridMismatch,
    #[error("expected a {expected:?}-domain state, got {found:?}")]
    DomainMismatch { expected: Domain, found: Domain },
    #[error("state is not normalized: norm {0}")]
    Normalization(f64),
    #[error("two-photon amplitude is not symmetric (defect {0:e})")]
    Asymmetric(f64),
    #[error("amplitude vector has length {found}, grid needs {expected}")]
    Length { expected: usize, found: usize },
    #[error("pulse of width {sigma_k} at {k0} does not fit the window of half-width {k_max}")]
    Coverage { sigma_k: f64, k0: f64, k_max: f64 },
    #[error("pulse width {sigma_k} is not resolved by lattice spacing {dk}")]
    Resolution { sigma_k: f64, dk: f64 },
    #[error("{leaked:e} of the norm sits in the outer tenth of the time window")]
    WindowLeak { leaked: f64 },
    #[error("rotation angle {0} must lie strictly inside (-pi, pi)")]
    RotationAngle(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integrator step failed: {0}")]
    Integrator(String),
    #[error("calibration residual {residual:e} exceeds {limit:e}")]
    Calibration { residual: f64, limit: f64 },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
