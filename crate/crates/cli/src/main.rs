mod calibration;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use photon_gate::cascade::{self, CascadeConfig, PulseSpec};
use photon_gate::optimize::{self, KernelSpec, Params, ScanRow};
use photon_gate::oracle::{self, OracleSettings};
use photon_gate::{EmitterParams, ScatterKernel, SpectralGrid};

use calibration::KernelRecord;
use config::{Config, OutputFormat};

#[derive(Parser)]
#[command(name = "photon-gate", version, about = "Cascaded emitter phase gates with a temporal trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one cascade at fixed parameters.
    Simulate(Common),
    /// Optimize the parameters for `run.n` rounds.
    Optimize(Common),
    /// Optimize every N in `optimizer.n_values`.
    Scan(Common),
    /// Fit the correlated-term constant against the cavity oracle and write
    /// the kernel metadata file.
    Calibrate(Common),
    /// Compare the calibrated kernel with the oracle on the reference grid.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set trap.lambda1=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// csv or text.
    #[arg(long)]
    output: Option<String>,
    /// Kernel metadata written by `calibrate`.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Number of rounds.
    #[arg(short = 'n', long)]
    rounds: Option<String>,
    /// Trap on/off.
    #[arg(long)]
    trap: Option<String>,
    #[arg(long)]
    sigma_k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda2: Option<String>,
    /// Lattice size.
    #[arg(short, long)]
    m: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| path.display().to_string())?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{kv}'"))?;
            cfg.set(k.trim(), v)?;
        }
        let flags = [
            ("run.output", &self.output),
            ("run.n", &self.rounds),
            ("trap.enabled", &self.trap),
            ("input.sigma_k", &self.sigma_k),
            ("emitter.delta", &self.delta),
            ("trap.lambda1", &self.lambda1),
            ("trap.lambda2", &self.lambda2),
            ("grid.m", &self.m),
            ("grid.k_max", &self.k_max),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                cfg.set(key, v)?;
            }
        }
        if let Some(p) = &self.calibration {
            cfg.calibration = Some(p.clone());
        }
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                Ok(out.flush()?)
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PHOTON_GATE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("PHOTON_GATE_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("PHOTON_GATE_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Correlated-term constant for the run: zero for linear runs, otherwise
/// the adopted constant of a matching calibration file.
fn bound_constant(cfg: &Config) -> Result<C64> {
    if cfg.linear {
        return Ok(C64::new(0.0, 0.0));
    }
    let path = cfg
        .calibration
        .as_ref()
        .ok_or_else(|| anyhow!("nonlinear runs need a kernel calibration (run.calibration or --calibration); see `photon-gate calibrate`"))?;
    let rec: KernelRecord = calibration::load(path)?;
    rec.check_matches(cfg.gamma, cfg.shell, cfg.rule)?;
    Ok(rec.constant)
}

fn kernel_spec(cfg: &Config) -> Result<KernelSpec> {
    Ok(KernelSpec { gamma: cfg.gamma, bound_constant: bound_constant(cfg)?, shell: cfg.shell, rule: cfg.rule })
}

fn render_rows(cfg: &Config, rows: &[ScanRow], notes: &[String]) -> String {
    match cfg.output {
        OutputFormat::Csv => report::csv(rows),
        OutputFormat::Text => report::text(rows, notes),
    }
}

fn simulate(args: &Common) -> Result<ExitCode> {
    let cfg = args.load()?;
    let spec = kernel_spec(&cfg)?;
    let trap = cfg.trap_params()?;
    let config = CascadeConfig {
        grid: cfg.grid()?,
        n_rounds: cfg.n,
        kernel: spec.at_detuning(cfg.delta)?,
        trap,
        compensation: cfg.compensation(),
        input: PulseSpec { sigma_k: cfg.sigma_k, k0: cfg.k0 },
    };
    let r = cascade::simulate(&config)?;
    let row = ScanRow {
        n: cfg.n,
        trap: trap.is_some(),
        params: Params {
            sigma_k: cfg.sigma_k,
            delta: cfg.delta,
            lambda1: trap.map_or(0.0, |t| t.lambda1),
            lambda2: trap.map_or(0.0, |t| t.lambda2),
        },
        fidelity: r.fidelity,
        infidelity: 1.0 - r.fidelity,
        p_success: r.p_success,
        p_fail: r.p_fail,
        evals: 1,
        converged: true,
        grid_m: cfg.grid_m,
        check_fidelity: None,
    };
    let note = format!(
        "O = {} {:+}i  drift = {}  linear phase = {}",
        report::sig12(r.overlap.re),
        report::sig12(r.overlap.im),
        report::sig12(r.norm_drift),
        report::sig12(r.linear_phase)
    );
    args.emit(&render_rows(&cfg, &[row], &[note]))?;
    Ok(ExitCode::SUCCESS)
}

fn check_note(r: &ScanRow) -> String {
    match r.check_fidelity {
        Some(f) => format!("F(check) = {}  |dF| = {}", report::sig12(f), report::sig12((f - r.fidelity).abs())),
        None => String::new(),
    }
}

fn optimize_cmd(args: &Common, all_n: bool) -> Result<ExitCode> {
    let mut cfg = args.load()?;
    if !all_n {
        cfg.n_values = vec![cfg.n];
    }
    let spec = cfg.optimization_spec(kernel_spec(&cfg)?)?;
    let result = optimize::scan(&spec)?;
    let notes: Vec<String> = result.rows.iter().map(check_note).collect();
    args.emit(&render_rows(&cfg, &result.rows, &notes))?;
    for (n, trap, why) in &result.failures {
        eprintln!("N = {n}, trap {}: {why}", if *trap { "on" } else { "off" });
    }
    Ok(if result.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn oracle_grid(cfg: &Config) -> Result<SpectralGrid> {
    Ok(SpectralGrid::new(cfg.oracle_m, cfg.oracle_k_max)?)
}

fn oracle_settings(cfg: &Config) -> OracleSettings {
    OracleSettings { max_step: cfg.oracle_step, ..OracleSettings::default() }
}

fn calibrate(args: &Common) -> Result<ExitCode> {
    let cfg = args.load()?;
    let emitter = EmitterParams::new(cfg.gamma, cfg.delta)?;
    let cal = oracle::calibrate_bound_constant(oracle_grid(&cfg)?, cfg.sigma_k, &emitter, cfg.shell, cfg.rule, &oracle_settings(&cfg))?;
    let text = calibration::render(&cal);
    match (&args.out, &cfg.calibration) {
        (None, Some(p)) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        _ => args.emit(&text)?,
    }
    Ok(ExitCode::SUCCESS)
}

const CHECK_SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];
const CHECK_DELTAS: [f64; 3] = [1.0, 2.0, 4.0];

fn oracle_check(args: &Common) -> Result<ExitCode> {
    let cfg = args.load()?;
    if cfg.linear {
        bail!("oracle-check compares the correlated term and needs a nonlinear kernel");
    }
    let c = bound_constant(&cfg)?;
    let grid = oracle_grid(&cfg)?;
    let settings = oracle_settings(&cfg);
    let points = oracle::equivalence_grid(
        grid,
        &CHECK_SIGMAS,
        &CHECK_DELTAS,
        |e| ScatterKernel::with_constant(e, c, cfg.shell).with_rule(cfg.rule),
        cfg.gamma,
        &settings,
    )?;
    let mut ok = true;
    let mut out = String::from("sigma_k,delta,distance,oracle_norm,modes,linear_error,pass\n");
    for p in &points {
        let lin = oracle::linear_sector_error(grid, p.sigma_k, &EmitterParams::new(cfg.gamma, p.delta)?, &settings)?;
        let pass = p.distance <= oracle::EQUIVALENCE_LIMIT && lin <= oracle::LINEAR_LIMIT;
        ok &= pass;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report::sig12(p.sigma_k),
            report::sig12(p.delta),
            report::sig12(p.distance),
            report::sig12(p.oracle_norm),
            p.modes,
            report::sig12(lin),
            pass
        ));
    }
    args.emit(&out)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize_cmd(a, false),
        Command::Scan(a) => optimize_cmd(a, true),
        Command::Calibrate(a) => calibrate(a),
        Command::OracleCheck(a) => oracle_check(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
