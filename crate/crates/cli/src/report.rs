//! Row output. Numbers are printed with 12 significant digits in a fixed,
//! platform-independent format so that reruns diff clean.

use std::fmt::Write as _;

use photon_gate::optimize::ScanRow;

pub const CSV_HEADER: &str = "n,trap,sigma_k,delta,lambda1,lambda2,fidelity,infidelity,p_success,p_fail,evals,converged,grid_m";

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `1e-5 <= |x| < 1e12`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = format!("{x:.11e}");
    let (mantissa, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_row(r: &ScanRow) -> String {
    let p = &r.params;
    let (l1, l2) = if r.trap { (p.lambda1, p.lambda2) } else { (0.0, 0.0) };
    [
        r.n.to_string(),
        r.trap.to_string(),
        sig12(p.sigma_k),
        sig12(p.delta),
        sig12(l1),
        sig12(l2),
        sig12(r.fidelity),
        sig12(r.infidelity),
        sig12(r.p_success),
        sig12(r.p_fail),
        r.evals.to_string(),
        r.converged.to_string(),
        r.grid_m.to_string(),
    ]
    .join(",")
}

pub fn csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Text table; `extra` adds per-row notes (e.g. drift) after the columns.
pub fn text(rows: &[ScanRow], extra: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>5} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>6} {:>5} {:>5}",
        "N", "trap", "sigma_k", "delta", "lambda1", "lambda2", "F", "P_fail", "evals", "conv", "m"
    );
    for (i, r) in rows.iter().enumerate() {
        let p = &r.params;
        let (l1, l2) = if r.trap { (p.lambda1, p.lambda2) } else { (0.0, 0.0) };
        let _ = write!(
            out,
            "{:>3} {:>5} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>6} {:>5} {:>5}",
            r.n,
            if r.trap { "on" } else { "off" },
            sig12(p.sigma_k),
            sig12(p.delta),
            sig12(l1),
            sig12(l2),
            sig12(r.fidelity),
            sig12(r.p_fail),
            r.evals,
            if r.converged { "yes" } else { "no" },
            r.grid_m
        );
        if let Some(e) = extra.get(i) {
            let _ = write!(out, "  {e}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.25), "0.25");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(sig12(1234.5), "1234.5");
        assert_eq!(sig12(1e-7), "1e-07");
        assert_eq!(sig12(1.23456789012345e-9), "1.23456789012e-09");
        assert_eq!(sig12(5e15), "5e+15");
        assert_eq!(sig12(100.0), "100");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for x in [0.918350012345678, 1.3487e-3, 42.0, -7.77e-12] {
            let y: f64 = sig12(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 1e-11);
        }
    }
}
