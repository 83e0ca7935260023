//! Multi-dimensional complex FFTs over row-major buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let forward = direction == FftDirection::Forward;
    if let Some(p) = guard.1.get(&(n, forward)) {
        return Arc::clone(p);
    }
    let p = guard.0.plan_fft(n, direction);
    guard.1.insert((n, forward), Arc::clone(&p));
    p
}

/// Unnormalized in-place DFT along every axis of `data`.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, direction);
    }
}

fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, direction: FftDirection) {
    let n = shape[axis];
    let fft = plan(n, direction);
    let stride: usize = shape[axis + 1..].iter().product();
    let scratch_len = fft.get_inplace_scratch_len();

    if stride == 1 {
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        return;
    }

    // Gather strided lines into contiguous rows, transform, then scatter back.
    let mut lines = vec![Complex64::default(); data.len()];
    {
        let src: &[Complex64] = data;
        lines.par_chunks_mut(n).enumerate().for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, (li, line)| {
                let base = (li / stride) * n * stride + li % stride;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = src[base + k * stride];
                }
                fft.process_with_scratch(line, scratch);
            },
        );
    }
    data.par_chunks_mut(n * stride).enumerate().for_each(|(outer, block)| {
        for j in 0..stride {
            let row = &lines[(outer * stride + j) * n..(outer * stride + j + 1) * n];
            for (k, v) in row.iter().enumerate() {
                block[k * stride + j] = *v;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_2d(data: &[Complex64], n0: usize, n1: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); data.len()];
        for k0 in 0..n0 {
            for k1 in 0..n1 {
                let mut acc = Complex64::default();
                for j0 in 0..n0 {
                    for j1 in 0..n1 {
                        let phase = -2.0 * std::f64::consts::PI
                            * ((k0 * j0) as f64 / n0 as f64 + (k1 * j1) as f64 / n1 as f64);
                        acc += data[j0 * n1 + j1] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k0 * n1 + k1] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_on_rectangular_grid() {
        let (n0, n1) = (4, 8);
        let data: Vec<Complex64> = (0..n0 * n1)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &[n0, n1], FftDirection::Forward);
        let slow = naive_dft_2d(&data, n0, n1);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_then_inverse_scales_by_len() {
        let shape = [4, 2, 8];
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut work = data.clone();
        fft_nd(&mut work, &shape, FftDirection::Forward);
        fft_nd(&mut work, &shape, FftDirection::Inverse);
        for (a, b) in work.iter().zip(&data) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }
}
