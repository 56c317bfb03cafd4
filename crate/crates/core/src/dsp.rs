//! FFT convolution helpers.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Linear convolution of `signal` with `filter`, keeping the first
/// `signal.len()` output samples (zero-delay "same" alignment).
///
/// The transform size is the next power of two at or above `N + K - 1`.
pub fn convolve_same(signal: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n == 0 || filter.is_empty() {
        return vec![0.0; n];
    }
    let full = n + filter.len() - 1;
    let size = full.next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let to_complex = |x: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        buf
    };
    let mut a = to_complex(signal);
    let mut b = to_complex(filter);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);

    let scale = 1.0 / size as f64;
    a[..n].iter().map(|c| c.re * scale).collect()
}

/// Magnitude of the analytic signal, built by zeroing the negative
/// frequencies and doubling the positive ones.
pub fn envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        if k < half || (k == half && n % 2 == 1) {
            *b *= 2.0;
        } else if k > half {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.norm() * scale).collect()
}
