//! FFT plan cache and row-major n-dimensional transforms.
//!
//! Wraps `rustfft` 1-D plans applied axis by axis. Plans are cached per
//! length so hot loops (band projections, Duhamel sums) do not re-plan.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanMap = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<PlanMap>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// Unnormalized DFT along every axis of a row-major `[n_axis; dim]` array.
///
/// `forward = false` runs the unnormalized inverse (no 1/N factor). Lines
/// are always processed contiguously; between passes the axes are rotated
/// with a cache-blocked permutation, which after `dim` passes restores the
/// original layout.
pub fn dft_nd(values: &mut [Complex64], dim: usize, n_axis: usize, forward: bool) {
    debug_assert_eq!(values.len(), n_axis.pow(dim as u32));
    let fft = plan(n_axis, forward);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if dim == 1 {
        fft.process_with_scratch(values, &mut scratch);
        return;
    }
    let mut buf = vec![Complex64::default(); values.len()];
    for _pass in 0..dim {
        for chunk in values.chunks_exact_mut(n_axis) {
            fft.process_with_scratch(chunk, &mut scratch);
        }
        rotate_axes(values, &mut buf, dim, n_axis);
    }
}

/// Cyclic axis rotation `(i0, .., i_{d-2}, i_{d-1}) -> (i_{d-1}, i0, ..)`.
/// Equivalent to a transpose for 2-D arrays; blocked for cache locality.
fn rotate_axes(values: &mut [Complex64], buf: &mut [Complex64], dim: usize, n: usize) {
    const BLOCK: usize = 32;
    if dim == 2 {
        for ib in (0..n).step_by(BLOCK) {
            for jb in (0..n).step_by(BLOCK) {
                for i in ib..(ib + BLOCK).min(n) {
                    for j in jb..(jb + BLOCK).min(n) {
                        buf[j * n + i] = values[i * n + j];
                    }
                }
            }
        }
    } else {
        // (i, j, k) -> out[k][i][j]
        let n2 = n * n;
        for ij in 0..n2 {
            let base_in = ij * n;
            for k in 0..n {
                buf[k * n2 + ij] = values[base_in + k];
            }
        }
    }
    values.copy_from_slice(buf);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_1d(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|m| {
                        let phase = -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64;
                        x[m] * Complex64::new(phase.cos(), phase.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_1d() {
        let x: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let mut y = x.clone();
        dft_nd(&mut y, 1, 32, true);
        let z = naive_dft_1d(&x);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn roundtrip_2d() {
        let n = 16usize;
        let x: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.13).sin(), (i as f64 * 0.29).cos()))
            .collect();
        let mut y = x.clone();
        dft_nd(&mut y, 2, n, true);
        dft_nd(&mut y, 2, n, false);
        let scale = (n * n) as f64;
        for (a, b) in y.iter().zip(&x) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }
}
