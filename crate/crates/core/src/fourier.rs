//! Lattice Fourier transforms.
//!
//! The continuum pair is `u(t) = (2 pi)^{-1/2} \int phi(k) e^{-ikt} dk`. On the
//! centered lattices of [`SpectralGrid`] the kernel `e^{-i k_i t_j}` factors
//! into `(-1)^{i+j} e^{-2 pi i ij/m}` (the constant `e^{-i m pi/2}` is one for
//! every admissible `m`), so both directions are a sign-modulated FFT scaled
//! by `dk/sqrt(2 pi)` or `dt/sqrt(2 pi)`. The pair is exactly unitary.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::SpectralGrid;

fn plan(m: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = planner.lock().expect("fft planner poisoned");
    planner.plan_fft(m, direction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    ToTime,
    ToFrequency,
}

impl Direction {
    fn fft(self) -> FftDirection {
        match self {
            Direction::ToTime => FftDirection::Forward,
            Direction::ToFrequency => FftDirection::Inverse,
        }
    }

    fn scale(self, grid: &SpectralGrid) -> f64 {
        let step = match self {
            Direction::ToTime => grid.dk(),
            Direction::ToFrequency => grid.dt(),
        };
        step / (2.0 * PI).sqrt()
    }
}

fn modulate(row: &mut [C64], scale: f64) {
    for (i, x) in row.iter_mut().enumerate() {
        let s = if i % 2 == 0 { scale } else { -scale };
        *x *= s;
    }
}

fn transform_rows(data: &mut [C64], m: usize, grid: &SpectralGrid, dir: Direction) {
    let fft = plan(m, dir.fft());
    let scale = dir.scale(grid);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(m).for_each_init(
        || vec![C64::new(0.0, 0.0); scratch_len],
        |scratch, row| {
            modulate(row, 1.0);
            fft.process_with_scratch(row, scratch);
            modulate(row, scale);
        },
    );
}

pub(crate) fn transform_1d(data: &mut [C64], grid: &SpectralGrid, dir: Direction) {
    debug_assert_eq!(data.len(), grid.m());
    transform_rows(data, grid.m(), grid, dir);
}

pub(crate) fn transpose_square(data: &mut [C64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// Both axes of a row-major `m x m` matrix.
pub(crate) fn transform_2d(data: &mut [C64], grid: &SpectralGrid, dir: Direction) {
    let m = grid.m();
    debug_assert_eq!(data.len(), m * m);
    transform_rows(data, m, grid, dir);
    transpose_square(data, m);
    transform_rows(data, m, grid, dir);
    transpose_square(data, m);
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct O(m^2) evaluation of the continuum kernel on the lattice.
    fn naive(grid: &SpectralGrid, input: &[C64], dir: Direction) -> Vec<C64> {
        let m = grid.m();
        (0..m)
            .map(|out| {
                let mut acc = C64::new(0.0, 0.0);
                for (inp, x) in input.iter().enumerate() {
                    let phase = match dir {
                        Direction::ToTime => -grid.k(inp) * grid.t(out),
                        Direction::ToFrequency => grid.t(inp) * grid.k(out),
                    };
                    acc += x * C64::from_polar(1.0, phase);
                }
                acc * dir.scale(grid)
            })
            .collect()
    }

    #[test]
    fn matches_direct_kernel() {
        let grid = SpectralGrid::new(32, 3.0).unwrap();
        let input: Vec<C64> = (0..32)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        for dir in [Direction::ToTime, Direction::ToFrequency] {
            let expect = naive(&grid, &input, dir);
            let mut fast = input.clone();
            transform_1d(&mut fast, &grid, dir);
            for (a, b) in fast.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let m = 8;
        let orig: Vec<C64> = (0..m * m).map(|i| C64::new(i as f64, 0.0)).collect();
        let mut d = orig.clone();
        transpose_square(&mut d, m);
        assert_eq!(d[1], orig[m]);
        transpose_square(&mut d, m);
        assert_eq!(d, orig);
    }
}
