//! Dense reference constructions shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vprir::model::{ModelParams, VariationalParams};

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Lower-triangular Toeplitz matrix with first column `b`.
pub fn dense_toeplitz(b: &[f64], len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, j| if i >= j && i - j < b.len() { b[i - j] } else { 0.0 })
}

pub fn dense_decay(a: f64, len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, j| if i == j { (a * i as f64).exp() } else { 0.0 })
}

/// Column `u` holds `p^{*u}` from row `u` down.
pub fn dense_power(p: &[f64], len: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(len, len);
    let mut power = vec![1.0];
    for u in 0..len {
        for (i, v) in power.iter().enumerate() {
            if u + i < len {
                m[(u + i, u)] = *v;
            }
        }
        power = poly_mul(&power, p);
    }
    m
}

pub fn dense_v(theta: &ModelParams, len: usize, coherence: bool) -> DMatrix<f64> {
    let kernel = if coherence { poly_mul(&theta.g, &[1.0, 0.0, -1.0]) } else { theta.g.clone() };
    dense_power(&theta.p, len) * dense_decay(theta.a, len) * dense_toeplitz(&kernel, len)
}

/// Full linear convolution with `s` as a `(L_s + len - 1) × len` matrix.
pub fn conv_matrix(s: &[f64], len: usize) -> DMatrix<f64> {
    let t = s.len() + len - 1;
    DMatrix::from_fn(t, len, |i, j| if i >= j && i - j < s.len() { s[i - j] } else { 0.0 })
}

pub fn random_theta(rng: &mut ChaCha8Rng, g_len: usize, p_len: usize) -> ModelParams {
    let mut g = vec![1.0];
    g.extend((1..g_len).map(|_| rng.random_range(-0.3..0.3) / g_len as f64));
    let mut p = vec![1.0];
    p.extend((1..p_len).map(|_| rng.random_range(-0.1..0.1)));
    ModelParams { g, a: rng.random_range(0.0..0.05), p, sigma_eps: rng.random_range(0.3..2.0), sigma_w: 1.0 }
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Largest absolute difference, relative to the largest entry of `b` (at least 1).
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// `E_q ln N(y; S h, σ_w² I)`, `E_q ln N(h; 0, σ_ε² (VᵀV)⁻¹)` and the
/// entropy of `q`, each from dense matrices.
pub struct Textbook {
    pub likelihood: f64,
    pub prior: f64,
    pub entropy: f64,
}

impl Textbook {
    pub fn total(&self) -> f64 {
        self.likelihood + self.prior + self.entropy
    }
}

pub fn textbook_vfe(theta: &ModelParams, z: &VariationalParams, y: &[f64], s: &[f64]) -> Textbook {
    let l = z.len();
    let sm = conv_matrix(s, l);
    let mu = DVector::from_column_slice(&z.mu_h);
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(&z.r_h));
    let yv = DVector::from_column_slice(y);

    let resid = (&yv - &sm * &mu).norm_squared() + (&sm * &r * sm.transpose()).trace();
    let var_w = theta.sigma_w.powi(2);
    let likelihood = -0.5 * y.len() as f64 * (2.0 * PI * var_w).ln() - resid / (2.0 * var_w);

    let v = dense_v(theta, l, true);
    let precision = v.transpose() * &v / theta.sigma_eps.powi(2);
    let cov = precision.clone().try_inverse().unwrap();
    let logdet_cov: f64 = cov.cholesky().unwrap().l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let prior =
        -0.5 * (l as f64 * (2.0 * PI).ln() + logdet_cov + (&precision * &r).trace() + mu.dot(&(&precision * &mu)));

    let entropy = 0.5 * z.r_h.iter().map(|ri| (2.0 * PI * std::f64::consts::E * ri).ln()).sum::<f64>();
    Textbook { likelihood, prior, entropy }
}

/// Roots of the monic polynomial `z^n + c[1] z^{n-1} + … + c[n]` by
/// simultaneous Weierstrass iteration.
pub fn durand_kerner(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

pub fn max_root_modulus(c: &[f64]) -> f64 {
    durand_kerner(c).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
