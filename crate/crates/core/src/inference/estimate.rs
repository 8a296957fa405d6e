use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{stabilize_filter, ModelParams, VariationalParams};
use crate::signal;

use super::adam::{AdamConfig, AdamMoments};
use super::objective::{evaluate, ObjectiveOptions, SufficientStats, TrainableLayout};

/// Smallest decay rate kept by the normalization step.
pub const MIN_DECAY_RATE: f64 = 1e-8;

/// Consecutive non-finite evaluations tolerated before giving up.
const MAX_NON_FINITE_STREAK: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub iterations: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    #[serde(rename = "L_h")]
    pub rir_len: usize,
    /// Trainable microphone filter length (the fixed `[1, 0, -1]` factor adds two taps).
    #[serde(rename = "L_g")]
    pub g_len: usize,
    #[serde(rename = "L_p")]
    pub p_len: usize,
    /// Kept for reproducible bookkeeping; the estimator itself is deterministic.
    pub seed: u64,
    /// Stop when the relative loss change over `early_stop_window` iterations
    /// falls below `early_stop_tol`.
    pub early_stop: bool,
    pub early_stop_window: usize,
    pub early_stop_tol: f64,
    pub train_sigma_w: bool,
    pub coherence_zeros: bool,
    /// Rescale source and observation to unit RMS before fitting.
    pub normalize_input: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            iterations: 5000,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            rir_len: 1000,
            g_len: 8,
            p_len: 4,
            seed: 0,
            early_stop: false,
            early_stop_window: 200,
            early_stop_tol: 1e-9,
            train_sigma_w: true,
            coherence_zeros: true,
            normalize_input: true,
        }
    }
}

impl InferenceConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn objective(&self) -> ObjectiveOptions {
        ObjectiveOptions { coherence_zeros: self.coherence_zeros, train_sigma_w: self.train_sigma_w }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rir_len == 0 || self.g_len == 0 || self.p_len == 0 {
            return Err(Error::Config("L_h, L_g and L_p must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Optimizer state for the joint fit of `θ` and `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub theta: ModelParams,
    pub z: VariationalParams,
    pub adam_moments: AdamMoments,
    pub step_count: usize,
    /// `-2·VFE` per iteration.
    pub loss_history: Vec<f64>,
}

impl OptimState {
    pub fn new(theta: ModelParams, z: VariationalParams) -> Self {
        let n = TrainableLayout::of(&theta, &z).total();
        Self { theta, z, adam_moments: AdamMoments::zeros(n), step_count: 0, loss_history: Vec::new() }
    }

    /// `g = [1], p = [1], a = 1e-8, σ = 1, μ_h = δ, R_h = I`.
    pub fn initial(cfg: &InferenceConfig) -> Self {
        Self::new(
            ModelParams::initial(cfg.g_len, cfg.p_len, MIN_DECAY_RATE),
            VariationalParams::initial(cfg.rir_len),
        )
    }

    pub fn layout(&self) -> TrainableLayout {
        TrainableLayout::of(&self.theta, &self.z)
    }

    pub fn record(&mut self, loss: f64) {
        self.loss_history.push(loss);
        self.step_count += 1;
    }
}

/// `-2·VFE` and its gradient over every trainable scalar, in the order of
/// [`TrainableLayout`].
pub fn loss_and_gradient(state: &OptimState, y: &[f64], s: &[f64]) -> Result<(f64, Vec<f64>)> {
    let stats = SufficientStats::new(y, s, state.z.len())?;
    let eval = evaluate(&state.theta, &state.z, &stats, ObjectiveOptions::default())?;
    Ok((eval.loss, eval.gradient))
}

/// One Adam step over the log-parameterized trainables.
pub fn adam_update(state: &OptimState, gradient: &[f64], lr: f64, beta1: f64, beta2: f64, eps: f64) -> OptimState {
    let layout = state.layout();
    let mut flat = layout.pack(&state.theta, &state.z);
    let mut next = state.clone();
    next.adam_moments.step(&mut flat, gradient, &AdamConfig { lr, beta1, beta2, eps });
    let (theta, z) = layout.unpack(&flat);
    next.theta = theta;
    next.z = z;
    next
}

/// Projection applied between optimizer steps: stabilize `g`, floor `a`,
/// pin the leading filter taps. Not part of the differentiated objective.
pub fn normalize(state: &OptimState) -> OptimState {
    let mut next = state.clone();
    if let Some(g0) = next.theta.g.first_mut() {
        *g0 = 1.0;
    }
    if let Some(p0) = next.theta.p.first_mut() {
        *p0 = 1.0;
    }
    match stabilize_filter(&next.theta.g) {
        Ok(g) => next.theta.g = g,
        Err(err) => warn!("filter stabilization skipped: {err}"),
    }
    if !(next.theta.a >= MIN_DECAY_RATE) {
        next.theta.a = MIN_DECAY_RATE;
    }
    next
}

/// Estimation result in the caller's units.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub state: OptimState,
    pub rir: Vec<f64>,
    /// Factor mapping the normalized-problem response back to the caller's units.
    pub rir_scale: f64,
}

fn rms(x: &[f64]) -> f64 {
    signal::mean_power(x).sqrt()
}

/// Joint maximization of the free energy over `θ` and `q`.
///
/// Each iteration normalizes the parameters, rebuilds the operators,
/// evaluates `-2·VFE` with its gradient and takes one Adam step.
pub fn estimate_rir(y: &[f64], s: &[f64], config: &InferenceConfig) -> Result<(OptimState, Vec<f64>)> {
    let est = estimate_rir_detailed(y, s, config)?;
    Ok((est.state, est.rir))
}

pub fn estimate_rir_detailed(y: &[f64], s: &[f64], config: &InferenceConfig) -> Result<Estimate> {
    config.validate()?;
    if y.len() != s.len() + config.rir_len - 1 {
        return Err(invalid(format!(
            "observation has {} samples, expected L_s + L_h - 1 = {}",
            y.len(),
            s.len() + config.rir_len - 1
        )));
    }

    // h' = (γ/α)·h when s' = α·s and y' = γ·y
    let (alpha, gamma) = if config.normalize_input {
        let rs = rms(s);
        let ry = rms(y);
        let alpha = if rs > 0.0 { 1.0 / rs } else { 1.0 };
        let gamma = if ry > 0.0 { 1.0 / ry } else { alpha };
        (alpha, gamma)
    } else {
        (1.0, 1.0)
    };
    let s_n: Vec<f64> = s.iter().map(|v| v * alpha).collect();
    let y_n: Vec<f64> = y.iter().map(|v| v * gamma).collect();
    let stats = SufficientStats::new(&y_n, &s_n, config.rir_len)?;

    let adam = config.adam();
    let options = config.objective();
    let mut state = OptimState::initial(config);
    let layout = state.layout();
    let mut streak = 0usize;

    for it in 0..config.iterations {
        state = normalize(&state);
        match evaluate(&state.theta, &state.z, &stats, options) {
            Ok(eval) if eval.gradient.iter().all(|g| g.is_finite()) => {
                streak = 0;
                let mut flat = layout.pack(&state.theta, &state.z);
                state.adam_moments.step(&mut flat, &eval.gradient, &adam);
                let (theta, z) = layout.unpack(&flat);
                state.theta = theta;
                state.z = z;
                state.record(eval.loss);
            }
            Ok(eval) => {
                streak += 1;
                state.record(eval.loss);
                if streak >= MAX_NON_FINITE_STREAK {
                    return Err(Error::NonFinite { term: "gradient".into(), breakdown: eval.breakdown.to_string() });
                }
            }
            Err(err @ Error::NonFinite { .. }) => {
                streak += 1;
                state.record(f64::NAN);
                if streak >= MAX_NON_FINITE_STREAK {
                    return Err(err);
                }
            }
            Err(err) => return Err(err),
        }
        if config.early_stop && converged(&state.loss_history, config.early_stop_window, config.early_stop_tol) {
            debug!("early stop after {} iterations", it + 1);
            break;
        }
    }
    state = normalize(&state);

    let scale = alpha / gamma;
    let rir: Vec<f64> = state.z.mu_h.iter().map(|m| m * scale).collect();
    state.z.mu_h = rir.clone();
    state.z.r_h.iter_mut().for_each(|r| *r *= scale * scale);
    state.theta.sigma_eps *= scale;
    state.theta.sigma_w /= gamma;
    Ok(Estimate { state, rir, rir_scale: scale })
}

fn converged(history: &[f64], window: usize, tol: f64) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let now = history[history.len() - 1];
    let then = history[history.len() - 1 - window];
    (now - then).abs() <= tol * then.abs().max(f64::MIN_POSITIVE)
}
