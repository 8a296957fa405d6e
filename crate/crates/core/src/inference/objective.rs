//! The optimized objective `-2·VFE` and its exact gradient.
//!
//! Data enter only through a few sufficient statistics (`‖y‖²`, `Sᵀy`
//! and the source autocorrelation), computed once per problem. The gradient
//! with respect to `p` is obtained by a reverse pass through the
//! convolution-power recursion that builds the columns of `P`.

use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{invalid, Result};
use crate::model::{GramBand, ModelParams, RirOperator, VariationalParams};
use crate::signal;

use super::vfe::VfeBreakdown;

/// Positions of every trainable scalar in the flat parameter vector:
/// `g[1..]`, `p[1..]`, `ln a`, `ln σ_ε²`, `ln σ_w²`, `μ_h`, `ln r_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainableLayout {
    pub g_len: usize,
    pub p_len: usize,
    pub rir_len: usize,
}

impl TrainableLayout {
    pub fn new(g_len: usize, p_len: usize, rir_len: usize) -> Self {
        Self { g_len: g_len.max(1), p_len: p_len.max(1), rir_len }
    }

    pub fn of(theta: &ModelParams, z: &VariationalParams) -> Self {
        Self::new(theta.g.len(), theta.p.len(), z.len())
    }

    pub fn g_tail(&self) -> Range<usize> {
        0..self.g_len - 1
    }

    pub fn p_tail(&self) -> Range<usize> {
        let start = self.g_len - 1;
        start..start + self.p_len - 1
    }

    pub fn log_a(&self) -> usize {
        self.p_tail().end
    }

    pub fn log_var_eps(&self) -> usize {
        self.log_a() + 1
    }

    pub fn log_var_w(&self) -> usize {
        self.log_a() + 2
    }

    pub fn mu(&self) -> Range<usize> {
        let start = self.log_a() + 3;
        start..start + self.rir_len
    }

    pub fn log_r(&self) -> Range<usize> {
        let start = self.mu().end;
        start..start + self.rir_len
    }

    pub fn total(&self) -> usize {
        self.log_r().end
    }

    pub fn pack(&self, theta: &ModelParams, z: &VariationalParams) -> Vec<f64> {
        let mut flat = vec![0.0; self.total()];
        flat[self.g_tail()].copy_from_slice(&theta.g[1..]);
        flat[self.p_tail()].copy_from_slice(&theta.p[1..]);
        flat[self.log_a()] = theta.a.ln();
        flat[self.log_var_eps()] = 2.0 * theta.sigma_eps.ln();
        flat[self.log_var_w()] = 2.0 * theta.sigma_w.ln();
        flat[self.mu()].copy_from_slice(&z.mu_h);
        for (dst, r) in flat[self.log_r()].iter_mut().zip(&z.r_h) {
            *dst = r.ln();
        }
        flat
    }

    pub fn unpack(&self, flat: &[f64]) -> (ModelParams, VariationalParams) {
        let mut g = vec![1.0];
        g.extend_from_slice(&flat[self.g_tail()]);
        let mut p = vec![1.0];
        p.extend_from_slice(&flat[self.p_tail()]);
        let theta = ModelParams {
            g,
            a: flat[self.log_a()].exp(),
            p,
            sigma_eps: (0.5 * flat[self.log_var_eps()]).exp(),
            sigma_w: (0.5 * flat[self.log_var_w()]).exp(),
        };
        let z = VariationalParams {
            mu_h: flat[self.mu()].to_vec(),
            r_h: flat[self.log_r()].iter().map(|v| v.exp()).collect(),
        };
        (theta, z)
    }
}

/// Data summaries that fully determine the likelihood term for a response
/// of `rir_len` samples.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    pub obs_len: usize,
    pub rir_len: usize,
    /// `‖y‖²`
    pub y_energy: f64,
    /// `(Sᵀ y)[k] = Σ_t y[t + k]·s[t]`
    pub cross: Vec<f64>,
    /// `φ[k] = Σ_t s[t + k]·s[t]`, so `SᵀS` is the symmetric Toeplitz of `φ`.
    pub autocorr: Vec<f64>,
}

impl SufficientStats {
    pub fn new(y: &[f64], s: &[f64], rir_len: usize) -> Result<Self> {
        if s.is_empty() || rir_len == 0 {
            return Err(invalid("source and response must be non-empty"));
        }
        if y.len() != s.len() + rir_len - 1 {
            return Err(invalid(format!(
                "observation has {} samples, expected L_s + L_h - 1 = {}",
                y.len(),
                s.len() + rir_len - 1
            )));
        }
        Ok(Self {
            obs_len: y.len(),
            rir_len,
            y_energy: signal::energy(y),
            cross: signal::cross_correlate(y, s, rir_len),
            autocorr: signal::cross_correlate(s, s, rir_len),
        })
    }

    pub fn source_energy(&self) -> f64 {
        self.autocorr[0]
    }

    /// `SᵀS μ`.
    pub fn gram_apply(&self, mu: &[f64]) -> Vec<f64> {
        let n = mu.len();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, &m) in mu.iter().enumerate() {
                    acc += self.autocorr[i.abs_diff(j)] * m;
                }
                acc
            })
            .collect()
    }
}

/// Which parts of the objective are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectiveOptions {
    pub coherence_zeros: bool,
    pub train_sigma_w: bool,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self { coherence_zeros: true, train_sigma_w: true }
    }
}

/// `-2·VFE`, its breakdown, and the gradient over the flat layout.
pub struct Evaluation {
    pub loss: f64,
    pub breakdown: VfeBreakdown,
    pub gradient: Vec<f64>,
}

pub fn evaluate(
    theta: &ModelParams,
    z: &VariationalParams,
    stats: &SufficientStats,
    options: ObjectiveOptions,
) -> Result<Evaluation> {
    let layout = TrainableLayout::of(theta, z);
    let len = z.len();
    if len != stats.rir_len {
        return Err(invalid(format!("posterior has {len} samples, data summaries {}", stats.rir_len)));
    }
    let op = RirOperator::with_coherence(theta.clone(), len, options.coherence_zeros)?;
    let kernel = op.kernel();
    let decay = op.decay();
    let powers = op.powers();
    let a = op.decay_rate();
    let l = len as f64;
    let big_t = stats.obs_len as f64;
    let inv_var_w = theta.sigma_w.powi(-2);
    let inv_var_eps = theta.sigma_eps.powi(-2);
    let mu = &z.mu_h;
    let r = &z.r_h;

    // likelihood: R = ‖y‖² - 2μ·Sᵀy + μᵀSᵀSμ + ‖s‖²·Σr
    let s_gram_mu = stats.gram_apply(mu);
    let source_energy = stats.source_energy();
    let residual = stats.y_energy - 2.0 * signal::dot(mu, &stats.cross)
        + signal::dot(mu, &s_gram_mu)
        + source_energy * r.iter().sum::<f64>();

    // prior quadratic part 1: ‖V μ‖²
    let x1 = crate::model::toeplitz_apply(kernel, mu)?;
    let x2: Vec<f64> = x1.iter().zip(decay).map(|(v, d)| v * d).collect();
    let v = powers.apply(&x2);
    let q1 = signal::energy(&v);

    // prior quadratic part 2: Tr(V R Vᵀ) = Σ_{i,j} M[i,j]·Γ[i,j], M = E G R Gᵀ E (banded)
    let width = kernel.len();
    let gram = GramBand::new(powers, width);
    let energies = crate::model::column_energies_from_gram(kernel, decay, &gram);
    let q2 = signal::dot(&energies, r);
    let q = q1 + q2;

    let likelihood = -0.5 * (big_t * (2.0 * PI / inv_var_w).ln() + residual * inv_var_w);
    let prior_logdet = -0.5 * (l * (1.0 / inv_var_eps).ln() - a * l * (l - 1.0));
    let prior_quadratic = -0.5 * q * inv_var_eps;
    let entropy = 0.5 * (r.iter().map(|v| v.ln()).sum::<f64>() + l);
    let breakdown = VfeBreakdown::new(likelihood, prior_logdet, prior_quadratic, entropy);
    if let Some(err) = breakdown.non_finite_error() {
        return Err(err);
    }
    let loss = -2.0 * breakdown.total;

    let mut grad = vec![0.0; layout.total()];

    // ∂Q1: reverse pass through v = P E G μ
    let v_bar: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
    let x2_bar = powers.apply_transpose(&v_bar);
    let mut dq_da: f64 = x2_bar.iter().zip(&x2).enumerate().map(|(u, (b, x))| u as f64 * b * x).sum();
    let x1_bar: Vec<f64> = x2_bar.iter().zip(decay).map(|(b, d)| b * d).collect();
    let mut dq_dkernel: Vec<f64> = (0..width)
        .map(|j| if j < len { signal::dot(&x1_bar[j..], &mu[..len - j]) } else { 0.0 })
        .collect();
    let dq1_dmu = crate::model::toeplitz_apply_transpose(kernel, &x1_bar);

    let mut col_adjoint: Vec<Vec<f64>> = (0..len)
        .map(|u| v_bar[u..].iter().map(|vb| x2[u] * vb).collect())
        .collect();

    // ∂Q2 through the kernel and the decay: Q2 = Σ_u r_u Σ_{k,l} w_k w_l Γ[u+k, u+l]
    for u in 0..len {
        let taps = width.min(len - u);
        let ru = r[u];
        for k in 0..taps {
            let wk = kernel[k] * decay[u + k];
            let mut row = 0.0;
            for l2 in 0..taps {
                let wl = kernel[l2] * decay[u + l2];
                let gkl = gram.get(u + k, u + l2);
                row += wl * gkl;
                dq_da += ru * (2 * u + k + l2) as f64 * wk * wl * gkl;
            }
            dq_dkernel[k] += 2.0 * ru * decay[u + k] * row;
        }
    }

    // M band, then the column adjoints ∂Q2/∂col_i = 2 Σ_j M[i,j] col_j
    let m_band: Vec<Vec<f64>> = (0..len)
        .map(|i| {
            (0..width.min(len - i))
                .map(|d| {
                    let j = i + d;
                    let lo = j.saturating_sub(width - 1);
                    let mut acc = 0.0;
                    for u in lo..=i {
                        acc += r[u] * kernel[i - u] * kernel[j - u];
                    }
                    acc * decay[i] * decay[j]
                })
                .collect()
        })
        .collect();
    for (i, adj) in col_adjoint.iter_mut().enumerate() {
        let n_i = adj.len();
        // columns j = i + d start d rows below column i
        for d in 0..width.min(len - i) {
            let mij = 2.0 * m_band[i][d];
            if mij == 0.0 {
                continue;
            }
            for (dst, c) in adj[d..].iter_mut().zip(powers.column(i + d)) {
                *dst += mij * c;
            }
        }
        // columns j = i - d start d rows above
        for d in 1..width.min(i + 1) {
            let mij = 2.0 * m_band[i - d][d];
            if mij == 0.0 {
                continue;
            }
            let cj = powers.column(i - d);
            for (dst, c) in adj.iter_mut().zip(&cj[d..d + n_i]) {
                *dst += mij * c;
            }
        }
    }
    let dq_dp = powers.backprop(&theta.p, col_adjoint);

    // assemble ∂J/∂(trainables), J = -2·VFE
    let g_tail = layout.g_tail();
    for (idx, j) in g_tail.clone().zip(1..) {
        let mut d = dq_dkernel.get(j).copied().unwrap_or(0.0);
        if options.coherence_zeros {
            d -= dq_dkernel.get(j + 2).copied().unwrap_or(0.0);
        }
        grad[idx] = inv_var_eps * d;
    }
    for (idx, d) in layout.p_tail().zip(&dq_dp) {
        grad[idx] = inv_var_eps * d;
    }
    grad[layout.log_a()] = a * (-l * (l - 1.0) + inv_var_eps * dq_da);
    grad[layout.log_var_eps()] = l - q * inv_var_eps;
    grad[layout.log_var_w()] = if options.train_sigma_w { big_t - residual * inv_var_w } else { 0.0 };
    for (k, idx) in layout.mu().enumerate() {
        grad[idx] = inv_var_w * 2.0 * (s_gram_mu[k] - stats.cross[k]) + inv_var_eps * dq1_dmu[k];
    }
    for (u, idx) in layout.log_r().enumerate() {
        grad[idx] = r[u] * (inv_var_w * source_energy + inv_var_eps * energies[u]) - 1.0;
    }

    Ok(Evaluation { loss, breakdown, gradient: grad })
}
