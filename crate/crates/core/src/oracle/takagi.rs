//! Takagi factorization `A = sum_l s_l v_l v_l^T` of a complex symmetric
//! matrix.
//!
//! For `A = B + iC` the real symmetric embedding `[[B, C], [C, -B]]` has
//! eigenvalues in `+-s` pairs; an eigenvector `[x; y]` with eigenvalue
//! `s >= 0` gives `v = x + i y` with `A conj(v) = s v`. The positive half of
//! the spectrum is therefore a complete orthonormal Takagi basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct TakagiMode {
    pub weight: f64,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Takagi {
    /// Kept modes, by decreasing weight.
    pub modes: Vec<TakagiMode>,
    /// `sum s_l^2` over dropped modes.
    pub discarded: f64,
}

/// Factorizes the row-major `n x n` symmetric matrix `a`, keeping modes with
/// `s_l > rel_cutoff * s_max`.
pub fn takagi(a: &[C64], n: usize, rel_cutoff: f64) -> Takagi {
    assert_eq!(a.len(), n * n, "takagi: matrix size");
    // entries far below machine precision of the largest one are flushed:
    // subnormals upset the tridiagonalization
    let floor = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * 1e-18;
    let embed = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (i, j) = (r % n, c % n);
        let z = 0.5 * (a[i * n + j] + a[j * n + i]);
        let z = if z.norm() < floor { C64::new(0.0, 0.0) } else { z };
        match (r < n, c < n) {
            (true, true) => z.re,
            (false, false) => -z.re,
            _ => z.im,
        }
    });
    let eig = SymmetricEigen::new(embed);
    assert!(eig.eigenvalues.iter().all(|x| x.is_finite()), "takagi: eigensolver produced non-finite values");
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    // the n largest are the non-negative half of the spectrum
    let top = &order[..n];
    let s_max = eig.eigenvalues[top[0]].max(0.0);
    let mut modes = Vec::new();
    let mut discarded = 0.0;
    for &col in top {
        let s = eig.eigenvalues[col].max(0.0);
        if s > rel_cutoff * s_max && s > 0.0 {
            let v = eig.eigenvectors.column(col);
            let vector = (0..n).map(|i| C64::new(v[i], v[n + i])).collect();
            modes.push(TakagiMode { weight: s, vector });
        } else {
            discarded += s * s;
        }
    }
    Takagi { modes, discarded }
}

/// `sum_l s_l v_l v_l^T`, row-major.
pub fn reconstruct(modes: &[TakagiMode], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for mode in modes {
        let v = &mode.vector;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += mode.weight * v[i] * v[j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[i * n + j] = z;
                a[j * n + i] = z;
            }
        }
        a
    }

    #[test]
    fn reconstructs_random_symmetric_matrices() {
        for (n, seed) in [(1, 1), (5, 2), (24, 3)] {
            let a = random_symmetric(n, seed);
            let t = takagi(&a, n, 0.0);
            let r = reconstruct(&t.modes, n);
            let err = a.iter().zip(&r).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n}: {err}");
            assert!(t.modes.windows(2).all(|w| w[0].weight >= w[1].weight));
        }
    }

    #[test]
    fn tolerates_underflowing_entries() {
        let n = 64;
        let u: Vec<C64> = (0..n).map(|i| C64::new((-0.5 * (i as f64 - 32.0).powi(2)).exp(), 0.0)).collect();
        let norm: f64 = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let a: Vec<C64> = (0..n * n).map(|ij| u[ij / n] * u[ij % n] / (norm * norm)).collect();
        let t = takagi(&a, n, 1e-6);
        assert_eq!(t.modes.len(), 1);
        assert!((t.modes[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modes_are_orthonormal() {
        let n = 12;
        let t = takagi(&random_symmetric(n, 7), n, 0.0);
        for (p, a) in t.modes.iter().enumerate() {
            for (q, b) in t.modes.iter().enumerate() {
                let dot: C64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x.conj() * y).sum();
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_one_input_gives_one_mode() {
        let n = 16;
        let u: Vec<C64> = (0..n).map(|i| C64::from_polar(1.0, 0.3 * i as f64) / (n as f64).sqrt()).collect();
        let a: Vec<C64> = (0..n * n).map(|ij| 0.8 * u[ij / n] * u[ij % n]).collect();
        let t = takagi(&a, n, 1e-10);
        assert_eq!(t.modes.len(), 1);
        assert!((t.modes[0].weight - 0.8).abs() < 1e-12);
        // v = e^{i theta} u with theta in {0, pi}
        let dot: C64 = t.modes[0].vector.iter().zip(&u).map(|(v, x)| x.conj() * v).sum();
        assert!((dot.norm() - 1.0).abs() < 1e-12 && dot.im.abs() < 1e-10);
        assert!(t.discarded < 1e-20);
    }
}
