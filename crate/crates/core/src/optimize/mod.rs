//! Per-N parameter search over `(sigma_k, delta, lambda1, lambda2)` and scans
//! over N.
//!
//! Each restart runs a bounded simplex search on a cheap search lattice; the
//! best point is then polished on the production lattice, where the reported
//! metrics are computed, and re-evaluated on a finer check lattice.

pub mod simplex;

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cascade::{self, CascadeConfig, Compensation, MetricsReport, PulseSpec};
use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::scattering::{unitary_bound_constant, EmitterParams, LatticeRule, ScatterKernel, ShellFactor};
use crate::trap::TrapParams;
use simplex::{minimize, Boxed, SimplexOptions};

/// Objective value assigned to parameters the simulator rejects.
pub const INFEASIBLE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    CzInfidelity,
    SorterPfail,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::CzInfidelity => "cz_infidelity",
            Objective::SorterPfail => "sorter_pfail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cz_infidelity" => Some(Objective::CzInfidelity),
            "sorter_pfail" => Some(Objective::SorterPfail),
            _ => None,
        }
    }
}

/// Emitter-independent part of a scattering kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub gamma: f64,
    pub bound_constant: C64,
    pub shell: ShellFactor,
    pub rule: LatticeRule,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { gamma: 1.0, bound_constant: unitary_bound_constant(1.0), shell: ShellFactor::Pole, rule: LatticeRule::Unitary }
    }
}

impl KernelSpec {
    pub fn at_detuning(&self, delta: f64) -> Result<ScatterKernel> {
        let e = EmitterParams::new(self.gamma, delta)?;
        Ok(ScatterKernel::with_constant(e, self.bound_constant, self.shell).with_rule(self.rule))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub sigma_k: f64,
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Params {
    fn from_vec(x: &[f64]) -> Self {
        Self { sigma_k: x[0], delta: x[1], lambda1: x.get(2).copied().unwrap_or(0.0), lambda2: x.get(3).copied().unwrap_or(0.0) }
    }

    fn to_vec(self, trap: bool) -> Vec<f64> {
        if trap {
            vec![self.sigma_k, self.delta, self.lambda1, self.lambda2]
        } else {
            vec![self.sigma_k, self.delta]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBounds {
    pub sigma_k: (f64, f64),
    pub delta: (f64, f64),
    pub lambda1: (f64, f64),
    pub lambda2: (f64, f64),
}

impl Default for ParameterBounds {
    fn default() -> Self {
        Self { sigma_k: (0.05, 5.0), delta: (0.1, 50.0), lambda1: (-5.0, 5.0), lambda2: (-5.0, 5.0) }
    }
}

impl ParameterBounds {
    fn boxed(&self, trap: bool) -> Result<Boxed> {
        let mut pairs = vec![self.sigma_k, self.delta];
        if trap {
            pairs.extend([self.lambda1, self.lambda2]);
        }
        Boxed::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
            .ok_or_else(|| Error::InvalidParameter("parameter bounds must be non-empty boxes".into()))
    }

    pub fn contains(&self, p: &Params, trap: bool) -> bool {
        self.boxed(trap).map(|b| b.contains(&p.to_vec(trap))).unwrap_or(false)
    }
}

/// Lattices used by the search, the polish, for the reported numbers, and
/// for the convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPlan {
    pub search: SpectralGrid,
    /// Defaults to the production lattice when `None`.
    pub polish: Option<SpectralGrid>,
    pub production: SpectralGrid,
    pub check: Option<SpectralGrid>,
}

impl Default for GridPlan {
    fn default() -> Self {
        Self {
            search: SpectralGrid::new(256, 6.0).unwrap(),
            polish: Some(SpectralGrid::new(512, 8.0).unwrap()),
            production: SpectralGrid::default(),
            check: Some(SpectralGrid::new(2048, 8.0).unwrap()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    pub n_values: Vec<usize>,
    pub objective: Objective,
    pub trap_modes: Vec<bool>,
    pub bounds: ParameterBounds,
    pub restarts: usize,
    /// Screen the restart lattice and the seed lattice of
    /// [`screening_points`] on the search grid and start from the best
    /// `restarts` of them.
    pub screen: bool,
    pub seed: u64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals: usize,
    /// Budget of the production-lattice polish.
    pub polish_evals: usize,
    /// Second, descending pass of [`scan`] seeded from the next N.
    pub sweep_back: bool,
    pub grids: GridPlan,
    pub kernel: KernelSpec,
    pub compensation: Compensation,
    pub k0: f64,
}

impl Default for OptimizationSpec {
    fn default() -> Self {
        Self {
            n_values: (1..=17).step_by(2).collect(),
            objective: Objective::CzInfidelity,
            trap_modes: vec![true, false],
            bounds: ParameterBounds::default(),
            restarts: 4,
            screen: true,
            seed: 0,
            f_tol: 1e-6,
            x_tol: 1e-6,
            max_evals: 600,
            polish_evals: 150,
            sweep_back: true,
            grids: GridPlan::default(),
            kernel: KernelSpec::default(),
            compensation: Compensation::default(),
            k0: 0.0,
        }
    }
}

impl OptimizationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::InvalidParameter("round counts must be positive".into()));
        }
        if self.trap_modes.is_empty() {
            return Err(Error::InvalidParameter("no trap mode requested".into()));
        }
        self.bounds.boxed(true)?;
        Ok(())
    }
}

/// One simulated parameter point.
pub fn cascade_config(
    n: usize,
    trap: bool,
    p: &Params,
    grid: SpectralGrid,
    kernel: &KernelSpec,
    compensation: Compensation,
    k0: f64,
) -> Result<CascadeConfig> {
    Ok(CascadeConfig {
        grid,
        n_rounds: n,
        kernel: kernel.at_detuning(p.delta)?,
        trap: trap.then(|| TrapParams::symmetric(p.lambda1, p.lambda2)),
        compensation,
        input: PulseSpec { sigma_k: p.sigma_k, k0 },
    })
}

fn objective_value(objective: Objective, config: &CascadeConfig) -> Result<f64> {
    match (objective, config.trap.is_some()) {
        (Objective::CzInfidelity, _) => Ok(1.0 - cascade::cz_fidelity(cascade::final_overlap(config)?)),
        (Objective::SorterPfail, true) => Ok(1.0 - cascade::sorter_success(cascade::final_overlap(config)?)),
        (Objective::SorterPfail, false) => Ok(0.5 * cascade::repeated_sorter_residual(config)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub trap: bool,
    pub params: Params,
    pub fidelity: f64,
    pub infidelity: f64,
    pub p_success: f64,
    pub p_fail: f64,
    pub evals: usize,
    pub converged: bool,
    pub grid_m: usize,
    /// Fidelity on the check lattice, when one was requested.
    pub check_fidelity: Option<f64>,
}

impl ScanRow {
    pub fn check_delta(&self) -> Option<f64> {
        self.check_fidelity.map(|f| (f - self.fidelity).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Rows that could not be produced, with the reason.
    pub failures: Vec<(usize, bool, String)>,
}

/// Search-lattice bookkeeping for one N.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub starts: Vec<Params>,
    pub start_values: Vec<f64>,
    pub best: Params,
    pub best_value: f64,
}

struct Evaluator<'a> {
    spec: &'a OptimizationSpec,
    n: usize,
    trap: bool,
}

impl Evaluator<'_> {
    fn config(&self, p: &Params, grid: SpectralGrid) -> Result<CascadeConfig> {
        cascade_config(self.n, self.trap, p, grid, &self.spec.kernel, self.spec.compensation, self.spec.k0)
    }

    fn value(&self, x: &[f64], grid: SpectralGrid) -> f64 {
        let p = Params::from_vec(x);
        self.config(&p, grid)
            .and_then(|c| objective_value(self.spec.objective, &c))
            .unwrap_or(INFEASIBLE)
    }

    fn metrics(&self, p: &Params, grid: SpectralGrid) -> Result<MetricsReport> {
        cascade::simulate(&self.config(p, grid)?)
    }
}

fn initial_step(x: &[f64], bounds: &Boxed) -> Vec<f64> {
    // relative steps for the positive scales, absolute ones for the phases
    let floors = [0.05, 0.1, 0.2, 0.02];
    x.iter().enumerate().map(|(i, v)| (0.2 * v.abs()).max(floors[i]).min(0.25 * bounds.width(i))).collect()
}

/// Restart lattice: warm start, centre of the box (geometric in `sigma_k`
/// and `delta`), then the corners of the half-size box around the centre in
/// a seeded order.
pub fn restart_points(bounds: &ParameterBounds, trap: bool, warm: Option<Params>, count: usize, seed: u64) -> Vec<Params> {
    let geo = |(a, b): (f64, f64), t: f64| a * (b / a).powf(t);
    let lin = |(a, b): (f64, f64), t: f64| a + (b - a) * t;
    let at = |t: [f64; 4]| Params {
        sigma_k: geo(bounds.sigma_k, t[0]),
        delta: geo(bounds.delta, t[1]),
        lambda1: if trap { lin(bounds.lambda1, t[2]) } else { 0.0 },
        lambda2: if trap { lin(bounds.lambda2, t[3]) } else { 0.0 },
    };
    let dims = if trap { 4 } else { 2 };
    let mut corners: Vec<Params> = (0..1usize << dims)
        .map(|mask| {
            let mut t = [0.5; 4];
            for (d, v) in t.iter_mut().enumerate().take(dims) {
                *v = if mask >> d & 1 == 1 { 0.75 } else { 0.25 };
            }
            at(t)
        })
        .collect();
    corners.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out: Vec<Params> = warm.into_iter().collect();
    out.push(at([0.5; 4]));
    out.extend(corners);
    out.truncate(count);
    out
}

/// Seed lattice for screening. Trap on: traps matched to the pulse
/// (`sigma_t = 1 / sigma_k`) over a range of rotation angles, across a
/// geometric detuning ladder. Trap off: a geometric `(sigma_k, delta)` grid.
/// Points outside `bounds` are dropped.
pub fn screening_points(bounds: &ParameterBounds, trap: bool) -> Vec<Params> {
    let ladder = |a: f64, b: f64, n: usize| (0..n).map(move |i| a * (b / a).powf(i as f64 / (n - 1) as f64));
    let mut out = Vec::new();
    if trap {
        for sigma_k in [0.25, 0.35, 0.45, 0.6f64] {
            for delta in ladder(0.3, 3.0, 12) {
                for deg in [40.0, 60.0, 80.0, 100.0, 120.0f64] {
                    if let Ok(t) = TrapParams::from_rotation(deg.to_radians(), sigma_k.recip()) {
                        out.push(Params { sigma_k, delta, lambda1: t.lambda1, lambda2: t.lambda2 });
                    }
                }
            }
        }
    } else {
        for sigma_k in ladder(0.1, 2.0, 8) {
            for delta in ladder(0.2, 5.0, 12) {
                out.push(Params { sigma_k, delta, lambda1: 0.0, lambda2: 0.0 });
            }
        }
    }
    out.retain(|p| bounds.contains(p, trap));
    out
}

/// Optimizes one N. Returns the row and the search-lattice trace.
pub fn optimize_for_n(n: usize, trap: bool, spec: &OptimizationSpec, warm: Option<Params>) -> Result<(ScanRow, SearchTrace)> {
    spec.validate()?;
    let bounds = spec.bounds.boxed(trap)?;
    let eval = Evaluator { spec, n, trap };
    let opts = SimplexOptions { f_tol: spec.f_tol, x_tol: spec.x_tol, max_evals: spec.max_evals };
    let search = spec.grids.search;
    let seed = spec.seed ^ (n as u64) << 1 ^ trap as u64;
    let mut screened = 0;
    let starts = if spec.screen {
        let mut pool = restart_points(&spec.bounds, trap, None, usize::MAX, seed);
        pool.extend(screening_points(&spec.bounds, trap));
        let values: Vec<f64> = pool.par_iter().map(|p| eval.value(&p.to_vec(trap), search)).collect();
        screened = pool.len();
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let take = spec.restarts.saturating_sub(warm.is_some() as usize).max(1);
        warm.into_iter().chain(order.into_iter().take(take).map(|i| pool[i])).collect()
    } else {
        restart_points(&spec.bounds, trap, warm, spec.restarts, seed)
    };

    let runs: Vec<_> = starts
        .par_iter()
        .map(|p| {
            let x0 = p.to_vec(trap);
            let f0 = eval.value(&x0, search);
            let r = minimize(|x| eval.value(x, search), &x0, &initial_step(&x0, &bounds), &bounds, &opts);
            (f0, r)
        })
        .collect();
    let start_values: Vec<f64> = runs.iter().map(|(f0, _)| *f0).collect();
    let mut evals: usize = screened + runs.iter().map(|(_, r)| r.evals + 1).sum::<usize>();
    let best = runs
        .iter()
        .map(|(_, r)| r)
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("at least one restart");
    if best.f >= INFEASIBLE {
        return Err(Error::InvalidParameter(format!("no feasible parameters found for N = {n}")));
    }
    let trace = SearchTrace { starts, start_values, best: Params::from_vec(&best.x), best_value: best.f };

    let production = spec.grids.production;
    let polish = spec.grids.polish.unwrap_or(production);
    let (x, converged) = if polish == search {
        (best.x.clone(), best.converged)
    } else {
        let step: Vec<f64> = initial_step(&best.x, &bounds).iter().map(|s| 0.1 * s).collect();
        let polish_opts = SimplexOptions { max_evals: spec.polish_evals, ..opts };
        let f_start = eval.value(&best.x, polish);
        let r = minimize(|x| eval.value(x, polish), &best.x, &step, &bounds, &polish_opts);
        evals += r.evals + 1;
        if r.f <= f_start {
            (r.x, best.converged && r.converged)
        } else {
            (best.x.clone(), false)
        }
    };

    let params = Params::from_vec(&x);
    let report = eval.metrics(&params, production)?;
    let check_fidelity = match spec.grids.check {
        Some(g) => Some(eval.metrics(&params, g)?.fidelity),
        None => None,
    };
    let row = ScanRow {
        n,
        trap,
        params,
        fidelity: report.fidelity,
        infidelity: 1.0 - report.fidelity,
        p_success: report.p_success,
        p_fail: report.p_fail,
        evals,
        converged,
        grid_m: production.m(),
        check_fidelity,
    };
    Ok((row, trace))
}

/// Rows for every requested `(N, trap)`, warm-starting each N from the
/// previous optimum of the same trap mode. With `sweep_back`, each row is
/// then re-optimized on the polish lattice from the optimum of the next N
/// and replaced if that does better. Failed rows are recorded and the scan carries on.
pub fn scan(spec: &OptimizationSpec) -> Result<ScanResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &trap in &spec.trap_modes {
        let mut mode_rows: Vec<ScanRow> = Vec::new();
        let mut warm = None;
        for &n in &spec.n_values {
            match optimize_for_n(n, trap, spec, warm) {
                Ok((row, _)) => {
                    warm = Some(row.params);
                    mode_rows.push(row);
                }
                Err(e) => failures.push((n, trap, e.to_string())),
            }
        }
        if spec.sweep_back {
            // straight on the polish lattice: the search lattice is biased at large N
            let exact = spec.grids.polish.unwrap_or(spec.grids.production);
            let local = OptimizationSpec {
                screen: false,
                restarts: 1,
                max_evals: 2 * spec.polish_evals,
                grids: GridPlan { search: exact, polish: Some(exact), ..spec.grids },
                ..spec.clone()
            };
            for i in (0..mode_rows.len().saturating_sub(1)).rev() {
                let (n, from) = (mode_rows[i].n, mode_rows[i + 1].params);
                if let Ok((alt, _)) = optimize_for_n(n, trap, &local, Some(from)) {
                    let evals = mode_rows[i].evals + alt.evals;
                    if row_objective(spec.objective, &alt) < row_objective(spec.objective, &mode_rows[i]) {
                        mode_rows[i] = alt;
                    }
                    mode_rows[i].evals = evals;
                }
            }
        }
        rows.extend(mode_rows);
    }
    Ok(ScanResult { rows, failures })
}

fn row_objective(objective: Objective, row: &ScanRow) -> f64 {
    match objective {
        Objective::CzInfidelity => row.infidelity,
        Objective::SorterPfail => row.p_fail,
    }
}

/// Re-simulates a row at its own parameters on `grid`.
pub fn recompute(row: &ScanRow, spec: &OptimizationSpec, grid: SpectralGrid) -> Result<MetricsReport> {
    cascade::simulate(&cascade_config(row.n, row.trap, &row.params, grid, &spec.kernel, spec.compensation, spec.k0)?)
}
