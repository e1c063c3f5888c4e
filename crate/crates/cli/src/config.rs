//! `key = value` run configuration. Every key has a default; a file and then
//! command-line overrides are applied on top, each checked as it lands.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};

use photon_gate::optimize::{GridPlan, KernelSpec, Objective, OptimizationSpec, ParameterBounds};
use photon_gate::{Compensation, LatticeRule, ShellFactor, SpectralGrid, TrapParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub grid_m: usize,
    pub grid_k_max: f64,

    pub gamma: f64,
    pub delta: f64,
    pub shell: ShellFactor,
    pub rule: LatticeRule,
    /// Drop the correlated term; such runs need no calibration.
    pub linear: bool,

    pub sigma_k: f64,
    pub k0: f64,

    pub trap: bool,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Defaults to `lambda1`.
    pub lambda3: Option<f64>,
    /// Rotation form of the trap; excludes the explicit coefficients.
    pub omega_dt: Option<f64>,
    pub sigma_t: Option<f64>,

    pub objective: Objective,
    pub n_values: Vec<usize>,
    pub trap_modes: Vec<bool>,
    pub restarts: usize,
    pub screen: bool,
    pub seed: u64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals: usize,
    pub polish_evals: usize,
    pub sweep_back: bool,
    pub bounds: ParameterBounds,
    pub search_m: usize,
    pub search_k_max: f64,
    /// `0` polishes on the production lattice.
    pub polish_m: usize,
    pub polish_k_max: f64,
    /// `0` disables the check lattice.
    pub check_m: usize,
    pub check_k_max: f64,

    pub n: usize,
    pub output: OutputFormat,
    pub calibration: Option<PathBuf>,
    pub delay: bool,
    pub chirp: bool,
    pub oracle_m: usize,
    pub oracle_k_max: f64,
    pub oracle_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        let plan = GridPlan::default();
        let spec = OptimizationSpec::default();
        let check = plan.check.unwrap_or(plan.production);
        let (oracle_m, oracle_k_max) = photon_gate::oracle::ORACLE_CHECK_GRID;
        Self {
            grid_m: plan.production.m(),
            grid_k_max: plan.production.k_max(),
            gamma: 1.0,
            delta: 2.0,
            shell: ShellFactor::Pole,
            rule: LatticeRule::Unitary,
            linear: false,
            sigma_k: 0.5,
            k0: 0.0,
            trap: false,
            lambda1: None,
            lambda2: None,
            lambda3: None,
            omega_dt: None,
            sigma_t: None,
            objective: spec.objective,
            n_values: spec.n_values,
            trap_modes: spec.trap_modes,
            restarts: spec.restarts,
            screen: spec.screen,
            seed: spec.seed,
            f_tol: spec.f_tol,
            x_tol: spec.x_tol,
            max_evals: spec.max_evals,
            polish_evals: spec.polish_evals,
            sweep_back: spec.sweep_back,
            bounds: spec.bounds,
            search_m: plan.search.m(),
            search_k_max: plan.search.k_max(),
            polish_m: plan.polish.map_or(0, |g| g.m()),
            polish_k_max: plan.polish.unwrap_or(plan.production).k_max(),
            check_m: check.m(),
            check_k_max: check.k_max(),
            n: 1,
            output: OutputFormat::Csv,
            calibration: None,
            delay: true,
            chirp: true,
            oracle_m,
            oracle_k_max,
            oracle_step: 1e-2,
        }
    }
}

fn number(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| anyhow!("{key}: expected a number, got '{v}'"))?;
    if !x.is_finite() {
        bail!("{key}: value must be finite");
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x = number(key, v)?;
    if x <= 0.0 {
        bail!("{key}: must be positive, got {x}");
    }
    Ok(x)
}

fn count(key: &str, v: &str, min: usize) -> Result<usize> {
    let n: usize = v.parse().map_err(|_| anyhow!("{key}: expected a non-negative integer, got '{v}'"))?;
    if n < min {
        bail!("{key}: must be at least {min}, got {n}");
    }
    Ok(n)
}

fn lattice_size(key: &str, v: &str) -> Result<usize> {
    let n = count(key, v, 8)?;
    if !n.is_power_of_two() {
        bail!("{key}: must be a power of two, got {n}");
    }
    Ok(n)
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => bail!("{key}: expected true or false, got '{v}'"),
    }
}

fn range(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v.split_once(',').ok_or_else(|| anyhow!("{key}: expected 'lo, hi'"))?;
    let (lo, hi) = (number(key, a.trim())?, number(key, b.trim())?);
    if lo >= hi {
        bail!("{key}: empty range [{lo}, {hi}]");
    }
    Ok((lo, hi))
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "grid.m" => self.grid_m = lattice_size(key, v)?,
            "grid.k_max" => self.grid_k_max = positive(key, v)?,

            "emitter.gamma" => self.gamma = positive(key, v)?,
            "emitter.delta" => self.delta = number(key, v)?,
            "emitter.shell" => {
                self.shell = match v {
                    "pole" => ShellFactor::Pole,
                    "flat" => ShellFactor::Flat,
                    _ => bail!("{key}: expected pole or flat, got '{v}'"),
                }
            }
            "emitter.rule" => {
                self.rule = match v {
                    "unitary" => LatticeRule::Unitary,
                    "truncated" => LatticeRule::Truncated,
                    _ => bail!("{key}: expected unitary or truncated, got '{v}'"),
                }
            }
            "emitter.linear" => self.linear = flag(key, v)?,

            "input.sigma_k" => self.sigma_k = positive(key, v)?,
            "input.k0" => self.k0 = number(key, v)?,

            "trap.enabled" => self.trap = flag(key, v)?,
            "trap.lambda1" => self.lambda1 = Some(number(key, v)?),
            "trap.lambda2" => self.lambda2 = Some(number(key, v)?),
            "trap.lambda3" => self.lambda3 = Some(number(key, v)?),
            "trap.omega_dt" => {
                let w = number(key, v)?;
                if w.abs() >= std::f64::consts::PI {
                    bail!("{key}: rotation angle must lie in (-pi, pi), got {w}");
                }
                self.omega_dt = Some(w);
            }
            "trap.sigma_t" => self.sigma_t = Some(positive(key, v)?),

            "optimizer.objective" => {
                self.objective = Objective::parse(v).ok_or_else(|| anyhow!("{key}: expected cz_infidelity or sorter_pfail, got '{v}'"))?
            }
            "optimizer.n_values" => {
                self.n_values = v.split(',').map(|x| count(key, x.trim(), 1)).collect::<Result<_>>()?;
                if self.n_values.is_empty() {
                    bail!("{key}: empty list");
                }
            }
            "optimizer.trap" => {
                self.trap_modes = match v {
                    "on" => vec![true],
                    "off" => vec![false],
                    "both" => vec![true, false],
                    _ => bail!("{key}: expected on, off or both, got '{v}'"),
                }
            }
            "optimizer.restarts" => self.restarts = count(key, v, 1)?,
            "optimizer.screen" => self.screen = flag(key, v)?,
            "optimizer.seed" => self.seed = v.parse().map_err(|_| anyhow!("{key}: expected an unsigned integer, got '{v}'"))?,
            "optimizer.f_tol" => self.f_tol = positive(key, v)?,
            "optimizer.x_tol" => self.x_tol = positive(key, v)?,
            "optimizer.max_evals" => self.max_evals = count(key, v, 1)?,
            "optimizer.polish_evals" => self.polish_evals = count(key, v, 0)?,
            "optimizer.sweep_back" => self.sweep_back = flag(key, v)?,
            "optimizer.sigma_k" => self.bounds.sigma_k = positive_range(key, v)?,
            "optimizer.delta" => self.bounds.delta = positive_range(key, v)?,
            "optimizer.lambda1" => self.bounds.lambda1 = range(key, v)?,
            "optimizer.lambda2" => self.bounds.lambda2 = range(key, v)?,
            "optimizer.search_m" => self.search_m = lattice_size(key, v)?,
            "optimizer.search_k_max" => self.search_k_max = positive(key, v)?,
            "optimizer.polish_m" => {
                self.polish_m = if v == "0" { 0 } else { lattice_size(key, v)? };
            }
            "optimizer.polish_k_max" => self.polish_k_max = positive(key, v)?,
            "optimizer.check_m" => {
                self.check_m = if v == "0" { 0 } else { lattice_size(key, v)? };
            }
            "optimizer.check_k_max" => self.check_k_max = positive(key, v)?,

            "run.n" => self.n = count(key, v, 1)?,
            "run.output" => {
                self.output = match v {
                    "csv" => OutputFormat::Csv,
                    "text" => OutputFormat::Text,
                    _ => bail!("{key}: expected csv or text, got '{v}'"),
                }
            }
            "run.calibration" => self.calibration = Some(PathBuf::from(v)),
            "run.delay" => self.delay = flag(key, v)?,
            "run.chirp" => self.chirp = flag(key, v)?,
            "run.oracle_m" => self.oracle_m = lattice_size(key, v)?,
            "run.oracle_k_max" => self.oracle_k_max = positive(key, v)?,
            "run.oracle_step" => self.oracle_step = positive(key, v)?,
            _ => bail!("unknown key '{key}'"),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected 'key = value'", i + 1))?;
            self.set(key.trim(), value).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        Ok(SpectralGrid::new(self.grid_m, self.grid_k_max)?)
    }

    /// Trap between scatterings, if enabled.
    pub fn trap_params(&self) -> Result<Option<TrapParams>> {
        if !self.trap {
            return Ok(None);
        }
        let explicit = self.lambda1.is_some() || self.lambda2.is_some() || self.lambda3.is_some();
        match (self.omega_dt, self.sigma_t) {
            (None, None) => {
                let l1 = self.lambda1.unwrap_or(0.0);
                Ok(Some(TrapParams::new(l1, self.lambda2.unwrap_or(0.0), self.lambda3.unwrap_or(l1))))
            }
            (Some(w), Some(s)) if !explicit => Ok(Some(TrapParams::from_rotation(w, s)?)),
            (Some(_), Some(_)) => bail!("trap.omega_dt/trap.sigma_t cannot be combined with trap.lambda*"),
            _ => bail!("trap.omega_dt and trap.sigma_t must be given together"),
        }
    }

    pub fn compensation(&self) -> Compensation {
        Compensation { delay: self.delay, chirp: self.chirp }
    }

    pub fn grid_plan(&self) -> Result<GridPlan> {
        Ok(GridPlan {
            search: SpectralGrid::new(self.search_m, self.search_k_max)?,
            polish: if self.polish_m == 0 { None } else { Some(SpectralGrid::new(self.polish_m, self.polish_k_max)?) },
            production: self.grid()?,
            check: if self.check_m == 0 { None } else { Some(SpectralGrid::new(self.check_m, self.check_k_max)?) },
        })
    }

    pub fn optimization_spec(&self, kernel: KernelSpec) -> Result<OptimizationSpec> {
        let spec = OptimizationSpec {
            n_values: self.n_values.clone(),
            objective: self.objective,
            trap_modes: self.trap_modes.clone(),
            bounds: self.bounds,
            restarts: self.restarts,
            screen: self.screen,
            seed: self.seed,
            f_tol: self.f_tol,
            x_tol: self.x_tol,
            max_evals: self.max_evals,
            polish_evals: self.polish_evals,
            sweep_back: self.sweep_back,
            grids: self.grid_plan()?,
            kernel,
            compensation: self.compensation(),
            k0: self.k0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn positive_range(key: &str, v: &str) -> Result<(f64, f64)> {
    let r = range(key, v)?;
    if r.0 <= 0.0 {
        bail!("{key}: lower bound must be positive");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let mut c = Config::default();
        c.apply_text("# run\ngrid.m = 256  # small\n\nemitter.delta=1.5\ntrap.enabled = on\noptimizer.n_values = 3, 5,7\n").unwrap();
        assert_eq!(c.grid_m, 256);
        assert_eq!(c.delta, 1.5);
        assert!(c.trap);
        assert_eq!(c.n_values, vec![3, 5, 7]);
    }

    #[test]
    fn trap_forms() {
        let mut c = Config::default();
        assert_eq!(c.trap_params().unwrap(), None);
        c.apply_text("trap.enabled = true\ntrap.lambda1 = 2\ntrap.lambda2 = 0.1").unwrap();
        let t = c.trap_params().unwrap().unwrap();
        assert_eq!((t.lambda1, t.lambda2, t.lambda3), (2.0, 0.1, 2.0));
        c.apply_text("trap.omega_dt = 1").unwrap();
        assert!(c.trap_params().is_err());
        let mut c = Config::default();
        c.apply_text("trap.enabled = true\ntrap.omega_dt = 1\ntrap.sigma_t = 2").unwrap();
        assert!(c.trap_params().unwrap().unwrap().rotation.is_some());
        assert!(c.apply_text("trap.omega_dt = 4").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = Config::default();
        assert!(c.apply_text("grid.points = 3").is_err());
        assert!(c.apply_text("grid.m = 100").is_err());
        assert!(c.apply_text("input.sigma_k = -1").is_err());
        assert!(c.apply_text("optimizer.restarts = 0").is_err());
        assert!(c.apply_text("optimizer.delta = 3, 1").is_err());
        assert!(c.apply_text("no equals sign").is_err());
        assert!(c.apply_text("emitter.gamma = nan").is_err());
    }

    #[test]
    fn error_names_the_line() {
        let err = Config::default().apply_text("grid.m = 64\nbogus = 1").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"));
    }
}
