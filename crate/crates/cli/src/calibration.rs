//! Kernel metadata written by `calibrate` and required by every run that
//! uses the correlated term.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;

use photon_gate::oracle::Calibration;
use photon_gate::{LatticeRule, ShellFactor};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRecord {
    pub gamma: f64,
    pub shell: ShellFactor,
    pub rule: LatticeRule,
    pub constant: C64,
    pub unitary: bool,
}

fn c64(x: C64) -> String {
    format!("{:e} {:e}", x.re, x.im)
}

/// Deterministic `key = value` rendering. Floats use the shortest
/// representation that round-trips.
pub fn render(cal: &Calibration) -> String {
    let (adopted, unitary) = cal.adopted();
    let lines = [
        ("format", "photon-gate-kernel 1".to_string()),
        ("gamma", format!("{:e}", cal.emitter.gamma)),
        ("delta", format!("{:e}", cal.emitter.delta)),
        ("sigma_k", format!("{:e}", cal.sigma_k)),
        ("shell", cal.shell.name().to_string()),
        ("rule", cal.rule.name().to_string()),
        ("oracle_m", cal.grid.m().to_string()),
        ("oracle_k_max", format!("{:e}", cal.grid.k_max())),
        ("fit", c64(cal.constant)),
        ("fit_residual", format!("{:e}", cal.residual)),
        ("refined_fit", c64(cal.refined_constant)),
        ("refined_residual", format!("{:e}", cal.refined_residual)),
        ("refinement_delta", format!("{:e}", cal.refinement_delta())),
        ("adopted", c64(adopted)),
        ("adopted_unitary", unitary.to_string()),
    ];
    let mut out = String::from("# correlated-term constant, fitted against the cavity oracle\n");
    for (k, v) in lines {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

fn parse_c64(s: &str) -> Result<C64> {
    let mut it = s.split_whitespace();
    let (Some(re), Some(im), None) = (it.next(), it.next(), it.next()) else {
        bail!("expected 're im', got '{s}'");
    };
    Ok(C64::new(re.parse()?, im.parse()?))
}

pub fn parse(text: &str) -> Result<KernelRecord> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected 'key = value'", i + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| anyhow!("missing '{k}'"));
    if get("format")? != "photon-gate-kernel 1" {
        bail!("unsupported format '{}'", get("format")?);
    }
    let shell = match get("shell")? {
        "pole" => ShellFactor::Pole,
        "flat" => ShellFactor::Flat,
        s => bail!("unknown shell '{s}'"),
    };
    let rule = match get("rule")? {
        "unitary" => LatticeRule::Unitary,
        "truncated" => LatticeRule::Truncated,
        s => bail!("unknown rule '{s}'"),
    };
    let constant = parse_c64(get("adopted")?).context("adopted")?;
    if !(constant.re.is_finite() && constant.im.is_finite()) || constant.norm() == 0.0 {
        bail!("adopted constant must be finite and nonzero");
    }
    Ok(KernelRecord {
        gamma: get("gamma")?.parse().context("gamma")?,
        shell,
        rule,
        constant,
        unitary: get("adopted_unitary")?.parse().context("adopted_unitary")?,
    })
}

pub fn load(path: &Path) -> Result<KernelRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading calibration {}", path.display()))?;
    parse(&text).with_context(|| format!("calibration {}", path.display()))
}

impl KernelRecord {
    /// The record must describe the kernel the run asks for.
    pub fn check_matches(&self, gamma: f64, shell: ShellFactor, rule: LatticeRule) -> Result<()> {
        if (self.gamma - gamma).abs() > 1e-12 * gamma.abs().max(1.0) {
            bail!("calibration is for gamma = {}, run uses {gamma}", self.gamma);
        }
        if self.shell != shell || self.rule != rule {
            bail!(
                "calibration is for the {}/{} kernel, run uses {}/{}",
                self.shell.name(),
                self.rule.name(),
                shell.name(),
                rule.name()
            );
        }
        Ok(())
    }
}
