//! Small signal helpers shared across modules: fast linear convolution,
//! cross-correlation and power bookkeeping.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Full linear convolution, `len(a) + len(b) - 1` samples, via FFT.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return direct_convolve(a, b);
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut fa = to_complex_padded(a, n);
    let mut fb = to_complex_padded(b, n);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Direct O(len(a)·len(b)) full convolution.
pub fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Cross-correlation `c[k] = Σ_t x[t + k] · y[t]` for lags `0..max_lag`.
pub fn cross_correlate(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    if x.is_empty() || y.is_empty() {
        return vec![0.0; max_lag];
    }
    // correlation = convolution of x with time-reversed y, offset by len(y) - 1
    let rev: Vec<f64> = y.iter().rev().copied().collect();
    let full = fft_convolve(x, &rev);
    let offset = y.len() - 1;
    (0..max_lag)
        .map(|k| full.get(offset + k).copied().unwrap_or(0.0))
        .collect()
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn unit_impulse(len: usize) -> Vec<f64> {
    let mut d = vec![0.0; len];
    if len > 0 {
        d[0] = 1.0;
    }
    d
}

fn to_complex_padded(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (dst, &src) in v.iter_mut().zip(x) {
        dst.re = src;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..77).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = fft_convolve(&a, &b);
        let d = direct_convolve(&a, &b);
        assert_eq!(f.len(), d.len());
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn correlation_lags() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 1.0];
        // c[k] = Σ_t x[t+k] y[t]
        assert_eq!(cross_correlate(&x, &y, 3), vec![1.0, 3.0, 5.0]);
    }
}
