//! Lower-triangular Toeplitz and diagonal-exponential operators, applied as
//! filters rather than dense matrices.

use log::warn;

use crate::error::{invalid, Error, Result};

/// Largest exponent allowed in `e^{a·u}` before the decay rate is clamped.
pub const MAX_EXPONENT: f64 = 700.0;

/// Causal FIR filtering truncated to the input length, i.e. multiplication
/// by the lower-triangular Toeplitz matrix whose first column is `b`.
pub fn toeplitz_apply(b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if b.is_empty() || x.is_empty() {
        return Err(invalid("toeplitz_apply needs non-empty kernel and input"));
    }
    let mut y = vec![0.0; x.len()];
    for (t, out) in y.iter_mut().enumerate() {
        let taps = b.len().min(t + 1);
        let mut acc = 0.0;
        for k in 0..taps {
            acc += b[k] * x[t - k];
        }
        *out = acc;
    }
    Ok(y)
}

/// Inverse of [`toeplitz_apply`]: the recursive (IIR) solve
/// `x[t] = (y[t] - Σ_{k≥1} b[k]·x[t-k]) / b[0]`.
pub fn toeplitz_solve(b: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if b.is_empty() || y.is_empty() {
        return Err(invalid("toeplitz_solve needs non-empty kernel and input"));
    }
    if b[0] == 0.0 {
        return Err(Error::SingularOperator);
    }
    let inv0 = 1.0 / b[0];
    let mut x = vec![0.0; y.len()];
    for t in 0..y.len() {
        let taps = b.len().min(t + 1);
        let mut acc = y[t];
        for k in 1..taps {
            acc -= b[k] * x[t - k];
        }
        x[t] = acc * inv0;
    }
    Ok(x)
}

/// Transpose of the Toeplitz operator: anti-causal correlation with `b`.
pub fn toeplitz_apply_transpose(b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    for (t, out) in y.iter_mut().enumerate() {
        let taps = b.len().min(n - t);
        let mut acc = 0.0;
        for k in 0..taps {
            acc += b[k] * x[t + k];
        }
        *out = acc;
    }
    y
}

/// Clamp a decay rate so that `a·(len-1)` stays representable.
pub fn guard_decay_rate(a: f64, len: usize) -> f64 {
    if len > 1 && a * (len - 1) as f64 > MAX_EXPONENT {
        let clamped = MAX_EXPONENT / (len - 1) as f64;
        warn!("decay rate {a} overflows over {len} samples; clamped to {clamped}");
        clamped
    } else {
        a
    }
}

/// The diagonal `E = Diag(e^{a·u})` (or its inverse), `u = 0..len-1`.
pub fn exp_decay_factors(a: f64, len: usize, inverse: bool) -> Vec<f64> {
    let a = guard_decay_rate(a, len);
    let sign = if inverse { -1.0 } else { 1.0 };
    (0..len).map(|u| (sign * a * u as f64).exp()).collect()
}

pub fn exp_decay_apply(a: f64, x: &[f64], inverse: bool) -> Vec<f64> {
    exp_decay_factors(a, x.len(), inverse)
        .iter()
        .zip(x)
        .map(|(e, v)| e * v)
        .collect()
}
