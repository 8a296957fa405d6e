use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, RirOperator, VariationalParams};
use crate::signal;

/// The variational free energy split into its four groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VfeBreakdown {
    /// `-½(T ln 2πσ_w² + E_q‖y - s∗h‖² / σ_w²)`
    pub likelihood_term: f64,
    /// `-½(L ln σ_ε² - L(L-1)a)`
    pub prior_logdet_term: f64,
    /// `-(‖Vμ‖² + Tr(V R Vᵀ)) / 2σ_ε²`
    pub prior_quadratic_term: f64,
    /// `½(Σ ln r + L)`
    pub entropy_term: f64,
    pub total: f64,
}

impl VfeBreakdown {
    pub fn new(likelihood: f64, prior_logdet: f64, prior_quadratic: f64, entropy: f64) -> Self {
        Self {
            likelihood_term: likelihood,
            prior_logdet_term: prior_logdet,
            prior_quadratic_term: prior_quadratic,
            entropy_term: entropy,
            total: likelihood + prior_logdet + prior_quadratic + entropy,
        }
    }

    /// Name of the first non-finite term, if any.
    pub fn non_finite_term(&self) -> Option<&'static str> {
        [
            ("likelihood", self.likelihood_term),
            ("prior_logdet", self.prior_logdet_term),
            ("prior_quadratic", self.prior_quadratic_term),
            ("entropy", self.entropy_term),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }

    pub(crate) fn non_finite_error(&self) -> Option<Error> {
        self.non_finite_term().map(|term| Error::NonFinite {
            term: term.to_string(),
            breakdown: self.to_string(),
        })
    }
}

impl fmt::Display for VfeBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "likelihood={:.6e} prior_logdet={:.6e} prior_quadratic={:.6e} entropy={:.6e} total={:.6e}",
            self.likelihood_term, self.prior_logdet_term, self.prior_quadratic_term, self.entropy_term, self.total
        )
    }
}

fn check_lengths(y: &[f64], s: &[f64], rir_len: usize) -> Result<()> {
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
    Ok(())
}

/// `E_q ‖y - s ∗ h‖²` under `h ~ N(μ_h, Diag(r_h))`:
/// `‖y‖² - 2 Σ y·(μ∗s) + Σ (r∗s²) + Σ (μ∗s)²`.
pub fn expected_residual(y: &[f64], s: &[f64], z: &VariationalParams) -> Result<f64> {
    z.validate()?;
    check_lengths(y, s, z.len())?;
    let predicted = signal::fft_convolve(&z.mu_h, s);
    let mean_part: f64 = y.iter().zip(&predicted).map(|(a, b)| (a - b).powi(2)).sum();
    // Σ_t (r ∗ s²)[t] over the full support is the product of the sums
    let variance_part = z.r_h.iter().sum::<f64>() * signal::energy(s);
    Ok(mean_part + variance_part)
}

/// Free energy of `q` at `θ`, with the coherence zeros included in `G`.
pub fn free_energy(theta: &ModelParams, z: &VariationalParams, y: &[f64], s: &[f64]) -> Result<VfeBreakdown> {
    let op = RirOperator::new(theta.clone(), z.len())?;
    free_energy_with(&op, z, y, s)
}

/// Free energy for an already constructed operator.
pub fn free_energy_with(op: &RirOperator, z: &VariationalParams, y: &[f64], s: &[f64]) -> Result<VfeBreakdown> {
    z.validate()?;
    op.params().validate()?;
    if z.len() != op.len() {
        return Err(invalid(format!("posterior has {} samples, operator {}", z.len(), op.len())));
    }
    let theta = op.params();
    let big_t = y.len() as f64;
    let l = op.len() as f64;
    let var_w = theta.sigma_w.powi(2);
    let var_eps = theta.sigma_eps.powi(2);

    let residual = expected_residual(y, s, z)?;
    let likelihood = -0.5 * (big_t * (2.0 * PI * var_w).ln() + residual / var_w);
    let prior_logdet = -0.5 * (l * var_eps.ln() - 2.0 * op.log_det());
    let v_mu = op.v_apply(&z.mu_h)?;
    let trace = signal::dot(op.column_energies(), &z.r_h);
    let prior_quadratic = -(signal::energy(&v_mu) + trace) / (2.0 * var_eps);
    let entropy = 0.5 * (z.r_h.iter().map(|r| r.ln()).sum::<f64>() + l);
    Ok(VfeBreakdown::new(likelihood, prior_logdet, prior_quadratic, entropy))
}
