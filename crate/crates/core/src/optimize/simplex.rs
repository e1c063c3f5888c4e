//! Box-constrained Nelder-Mead. Trial points are clamped onto the box, which
//! keeps the simplex feasible without penalty terms.

#[derive(Debug, Clone, PartialEq)]
pub struct Boxed {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Boxed {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Option<Self> {
        (lo.len() == hi.len() && !lo.is_empty() && lo.iter().zip(&hi).all(|(a, b)| a < b)).then_some(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, lo), hi)| (lo..=hi).contains(&v))
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub f_tol: f64,
    /// Largest vertex offset from the best vertex, relative to the box width.
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { f_tol: 1e-6, x_tol: 1e-6, max_evals: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial edge lengths `step`.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    bounds: &Boxed,
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = bounds.dim();
    assert_eq!(x0.len(), n);
    assert_eq!(step.len(), n);
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        v[i] += step[i];
        if v[i] > bounds.hi[i] {
            v[i] = start[i] - step[i];
        }
        bounds.clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let converged;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let extent = (1..=n)
            .flat_map(|v| (0..n).map(move |i| (v, i)))
            .map(|(v, i)| (simplex[v][i] - simplex[0][i]).abs() / bounds.width(i))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_tol && extent <= opts.x_tol {
            converged = true;
            break;
        }
        if extent == 0.0 || evals.get() >= opts.max_evals {
            converged = extent == 0.0 && spread.is_finite();
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect();
            bounds.clamp(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(rho * alpha);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for v in 1..=n {
            let mut p: Vec<f64> = best.iter().zip(&simplex[v]).map(|(b, x)| b + sigma * (x - b)).collect();
            bounds.clamp(&mut p);
            values[v] = eval(&p);
            simplex[v] = p;
        }
    }
    SimplexResult { x: simplex[0].clone(), f: values[0], evals: evals.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize, r: f64) -> Boxed {
        Boxed::new(vec![-r; n], vec![r; n]).unwrap()
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = SimplexOptions { f_tol: 1e-14, x_tol: 1e-9, max_evals: 5000 };
        let r = minimize(f, &[-1.2, 1.0], &[0.1, 0.1], &unit_box(2, 5.0), &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn active_bound_is_respected() {
        // unconstrained minimum at (3, -2); box stops it at x0 = 1
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2);
        let b = Boxed::new(vec![-1.0, -5.0], vec![1.0, 5.0]).unwrap();
        let r = minimize(f, &[0.0, 0.0], &[0.2, 0.2], &b, &SimplexOptions::default());
        assert!(b.contains(&r.x));
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn never_worse_than_start_and_deterministic() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[1].powi(2) + 0.1 * x[2].abs();
        let b = unit_box(3, 2.0);
        let x0 = [0.4, 0.7, -0.3];
        let a = minimize(f, &x0, &[0.3; 3], &b, &SimplexOptions::default());
        let c = minimize(f, &x0, &[0.3; 3], &b, &SimplexOptions::default());
        assert!(a.f <= f(&x0));
        assert_eq!(a, c);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = SimplexOptions { max_evals: 10, ..Default::default() };
        let r = minimize(f, &[1.0, 1.0, 1.0], &[0.5; 3], &unit_box(3, 2.0), &opts);
        assert!(!r.converged);
        assert!(r.evals >= 10);
    }

    #[test]
    fn infinite_values_are_avoided() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::INFINITY } else { (x[0] - 0.2).powi(2) + x[1] * x[1] };
        let r = minimize(f, &[0.0, 0.3], &[0.2, 0.2], &unit_box(2, 1.0), &SimplexOptions::default());
        assert!((r.x[0] - 0.2).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn rejects_empty_box() {
        assert!(Boxed::new(vec![1.0], vec![1.0]).is_none());
        assert!(Boxed::new(vec![], vec![]).is_none());
    }
}
