//! Generative room response model and its structured operators.
//!
//! The response is `h = G⁻¹ E⁻¹ P⁻¹ ε` with `ε ~ N(0, σ_ε² I)`. The
//! composite whitening operator `V = P E G` maps a response back to its
//! driving noise; it is lower triangular with diagonal `e^{a·u}`.

mod power;
mod stabilize;
mod toeplitz;

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use power::{p_apply, p_matrix_columns, p_solve, PowerColumns};
pub use stabilize::{
    filter_roots, g_effective, max_root_modulus, poly_from_roots, stabilize_filter, COHERENCE_KERNEL,
    STABILITY_TOLERANCE,
};
pub use toeplitz::{
    exp_decay_apply, exp_decay_factors, guard_decay_rate, toeplitz_apply, toeplitz_apply_transpose,
    toeplitz_solve, MAX_EXPONENT,
};

/// Generative parameters `θ = {g, a, p, σ_ε, σ_w}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Microphone filter, `g[0] = 1`.
    pub g: Vec<f64>,
    /// Per-sample exponential decay rate, `a ≥ 0`.
    pub a: f64,
    /// Wall-absorption filter, `p[0] = 1`.
    pub p: Vec<f64>,
    pub sigma_eps: f64,
    pub sigma_w: f64,
}

impl ModelParams {
    /// `PEG = I` up to the fixed coherence factor: trivial filters,
    /// a vanishing decay rate and unit noise levels.
    pub fn initial(g_len: usize, p_len: usize, a: f64) -> Self {
        let mut g = vec![0.0; g_len.max(1)];
        g[0] = 1.0;
        let mut p = vec![0.0; p_len.max(1)];
        p[0] = 1.0;
        Self { g, a, p, sigma_eps: 1.0, sigma_w: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.first() != Some(&1.0) {
            return Err(invalid(format!("microphone filter needs g[0] == 1, got {:?}", self.g)));
        }
        if self.p.first() != Some(&1.0) {
            return Err(invalid(format!("absorption filter needs p[0] == 1, got {:?}", self.p)));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::Domain(format!("decay rate must be finite and ≥ 0, got {}", self.a)));
        }
        if !(self.sigma_eps > 0.0 && self.sigma_eps.is_finite()) {
            return Err(Error::Domain(format!("sigma_eps must be > 0, got {}", self.sigma_eps)));
        }
        if !(self.sigma_w > 0.0 && self.sigma_w.is_finite()) {
            return Err(Error::Domain(format!("sigma_w must be > 0, got {}", self.sigma_w)));
        }
        if self.g.iter().chain(&self.p).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite filter coefficient".into()));
        }
        Ok(())
    }
}

/// Mean-field Gaussian posterior `q(h[u]) = N(μ_h[u], r_h[u])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub mu_h: Vec<f64>,
    pub r_h: Vec<f64>,
}

impl VariationalParams {
    /// `μ_h = δ`, `R_h = I`.
    pub fn initial(len: usize) -> Self {
        Self { mu_h: crate::signal::unit_impulse(len), r_h: vec![1.0; len] }
    }

    pub fn len(&self) -> usize {
        self.mu_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_h.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_h.len() != self.r_h.len() {
            return Err(invalid(format!(
                "posterior mean has {} samples but variances have {}",
                self.mu_h.len(),
                self.r_h.len()
            )));
        }
        if let Some(r) = self.r_h.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Domain(format!("posterior variance must be > 0, got {r}")));
        }
        Ok(())
    }
}

/// Banded Gram matrix of the `P` columns: `⟨P e_i, P e_{i+d}⟩`, `0 ≤ d < width`.
#[derive(Debug, Clone)]
pub(crate) struct GramBand {
    band: Vec<Vec<f64>>,
}

impl GramBand {
    pub(crate) fn new(powers: &PowerColumns, width: usize) -> Self {
        let len = powers.len();
        let band = (0..len)
            .map(|i| {
                let ci = powers.column(i);
                (0..width.min(len - i))
                    .map(|d| crate::signal::dot(&ci[d..], powers.column(i + d)))
                    .collect()
            })
            .collect();
        Self { band }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.band[lo][hi - lo]
    }
}

/// The composite operator `V = P·E·G` for a response of `len` samples.
#[derive(Debug)]
pub struct RirOperator {
    len: usize,
    params: ModelParams,
    coherence_zeros: bool,
    decay_rate: f64,
    kernel: Vec<f64>,
    decay: Vec<f64>,
    powers: PowerColumns,
    column_energies: OnceLock<Vec<f64>>,
}

impl Clone for RirOperator {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(v) = self.column_energies.get() {
            let _ = cache.set(v.clone());
        }
        Self {
            len: self.len,
            params: self.params.clone(),
            coherence_zeros: self.coherence_zeros,
            decay_rate: self.decay_rate,
            kernel: self.kernel.clone(),
            decay: self.decay.clone(),
            powers: self.powers.clone(),
            column_energies: cache,
        }
    }
}

impl RirOperator {
    /// Operator with the fixed `[1, 0, -1]` factor included in `G`.
    pub fn new(params: ModelParams, len: usize) -> Result<Self> {
        Self::with_coherence(params, len, true)
    }

    /// `coherence_zeros = false` uses `G = Toep(g)` alone, which is the
    /// form used to draw synthetic rooms.
    pub fn with_coherence(params: ModelParams, len: usize, coherence_zeros: bool) -> Result<Self> {
        if len == 0 {
            return Err(invalid("response length must be positive"));
        }
        params.validate()?;
        let decay_rate = guard_decay_rate(params.a, len);
        let kernel = if coherence_zeros { g_effective(&params.g) } else { params.g.clone() };
        let decay = exp_decay_factors(decay_rate, len, false);
        let powers = PowerColumns::new(&params.p, len)?;
        Ok(Self {
            len,
            params,
            coherence_zeros,
            decay_rate,
            kernel,
            decay,
            powers,
            column_energies: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn has_coherence_zeros(&self) -> bool {
        self.coherence_zeros
    }

    /// FIR kernel of `G` actually applied (`g`, or `g ∗ [1, 0, -1]`).
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Decay rate after the overflow guard.
    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    pub fn powers(&self) -> &PowerColumns {
        &self.powers
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(invalid(format!("expected {} samples, got {}", self.len, x.len())));
        }
        Ok(())
    }

    /// `V x = P (E (G x))`.
    pub fn v_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let gx = toeplitz_apply(&self.kernel, x)?;
        let egx: Vec<f64> = gx.iter().zip(&self.decay).map(|(v, e)| v * e).collect();
        Ok(self.powers.apply(&egx))
    }

    /// `Vᵀ x = Gᵀ (E (Pᵀ x))`.
    pub fn v_apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let ptx = self.powers.apply_transpose(x);
        let eptx: Vec<f64> = ptx.iter().zip(&self.decay).map(|(v, e)| v * e).collect();
        Ok(toeplitz_apply_transpose(&self.kernel, &eptx))
    }

    /// `V⁻¹ x`, solving `P`, then `E`, then `G`.
    pub fn v_solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let p_inv = self.powers.solve(x);
        let e_inv: Vec<f64> = p_inv.iter().zip(&self.decay).map(|(v, e)| v / e).collect();
        toeplitz_solve(&self.kernel, &e_inv)
    }

    /// `‖V e_u‖²` for every `u`, so that `Tr(V R Vᵀ) = Σ_u r[u]·energy[u]`.
    pub fn column_energies(&self) -> &[f64] {
        self.column_energies.get_or_init(|| {
            let gram = GramBand::new(&self.powers, self.kernel.len());
            column_energies_from_gram(&self.kernel, &self.decay, &gram)
        })
    }

    /// `ln det V = a·L(L-1)/2`; `G` and `P` have unit diagonals.
    pub fn log_det(&self) -> f64 {
        let l = self.len as f64;
        self.decay_rate * l * (l - 1.0) / 2.0
    }

    /// `ln p(h | θ) = ln N(V h; 0, σ_ε² I) + ln det V`.
    pub fn prior_log_density(&self, h: &[f64]) -> Result<f64> {
        let vh = self.v_apply(h)?;
        let var = self.params.sigma_eps.powi(2);
        let l = self.len as f64;
        Ok(-0.5 * l * (2.0 * PI * var).ln() - crate::signal::energy(&vh) / (2.0 * var) + self.log_det())
    }

    /// Seeded driving noise `ε ~ N(0, σ_ε² I)`.
    pub fn excitation(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.params.sigma_eps * z
            })
            .collect()
    }

    /// Draw `h = G⁻¹ E⁻¹ P⁻¹ ε`. Fails if the microphone filter has a root
    /// outside the unit circle.
    pub fn sample_rir(&self, seed: u64) -> Result<Vec<f64>> {
        let max_modulus = max_root_modulus(&self.params.g)?;
        if max_modulus > 1.0 + STABILITY_TOLERANCE {
            return Err(Error::Unstable { filter: self.params.g.clone(), max_modulus });
        }
        self.v_solve(&self.excitation(seed))
    }
}

pub(crate) fn column_energies_from_gram(kernel: &[f64], decay: &[f64], gram: &GramBand) -> Vec<f64> {
    let len = decay.len();
    (0..len)
        .map(|u| {
            let taps = kernel.len().min(len - u);
            let mut acc = 0.0;
            for k in 0..taps {
                let wk = kernel[k] * decay[u + k];
                if wk == 0.0 {
                    continue;
                }
                acc += wk * wk * gram.get(u + k, u + k);
                for l in (k + 1)..taps {
                    acc += 2.0 * wk * kernel[l] * decay[u + l] * gram.get(u + k, u + l);
                }
            }
            acc
        })
        .collect()
}

/// Convenience wrapper: `V x` for `op`.
pub fn v_apply(op: &RirOperator, x: &[f64]) -> Result<Vec<f64>> {
    op.v_apply(x)
}

pub fn v_column_energies(op: &RirOperator) -> Vec<f64> {
    op.column_energies().to_vec()
}

pub fn log_det_v(op: &RirOperator) -> f64 {
    op.log_det()
}

pub fn sample_rir(op: &RirOperator, seed: u64) -> Result<Vec<f64>> {
    op.sample_rir(seed)
}
