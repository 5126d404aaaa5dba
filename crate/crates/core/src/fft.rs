//! Multi-dimensional FFT over row-major arrays, one axis at a time.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place transform of a row-major array of `shape` (unused axes are 1).
/// The inverse is unnormalized.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: [usize; 3], direction: FftDirection) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let strides = [shape[1] * shape[2], shape[2], 1];
    for axis in 0..3 {
        let n = shape[axis];
        if n == 1 {
            continue;
        }
        let fft = planner.plan_fft(n, direction);
        let stride = strides[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let lines = data.len() / n;
        for l in 0..lines {
            // offset of the line start: decompose l over the other axes
            let start = {
                let inner = l % stride;
                let outer = l / stride;
                outer * stride * n + inner
            };
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[start + k * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                data[start + k * stride] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_identity_times_len() {
        let shape = [4, 6, 5];
        let n: usize = shape.iter().product();
        let orig: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut data = orig.clone();
        fft_nd(&mut data, shape, FftDirection::Forward);
        fft_nd(&mut data, shape, FftDirection::Inverse);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft_in_2d() {
        let shape = [3, 4, 1];
        let vals: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut data = vals.clone();
        fft_nd(&mut data, shape, FftDirection::Forward);
        for k0 in 0..3 {
            for k1 in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..3 {
                    for j1 in 0..4 {
                        let phase = -2.0 * std::f64::consts::PI * ((k0 * j0) as f64 / 3.0 + (k1 * j1) as f64 / 4.0);
                        acc += vals[j0 * 4 + j1] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - data[k0 * 4 + k1]).norm() < 1e-9);
            }
        }
    }
}
