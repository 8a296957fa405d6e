//! Room impulse response estimation with a variational, physics-based prior.
//!
//! A room response is modelled as filtered, exponentially decaying white
//! noise, `h = G⁻¹ E⁻¹ P⁻¹ ε`, where `G` is a short FIR microphone filter,
//! `E` a diagonal exponential decay and `P` a frequency-dependent absorption
//! operator built from convolution powers of a short filter `p`. Given the
//! dry source `s` and the noisy reverberant observation `y = s ∗ h + w`,
//! [`inference::estimate_rir`] maximizes the variational free energy of a
//! mean-field Gaussian posterior over `h` jointly with the model parameters.
//!
//! The crate also ships two STFT deconvolution baselines, the acoustic
//! metrics used to compare estimates (EDC, EDR, RT30, MSE), and an
//! experiment harness that generates synthetic data and runs sweeps.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod signal;

pub use baselines::{crossband_deconvolution, spectral_deconvolution, StftConfig};
pub use error::{Error, Result};
pub use inference::{estimate_rir, InferenceConfig, OptimState, VfeBreakdown};
pub use metrics::{compare, MetricReport};
pub use model::{ModelParams, RirOperator, VariationalParams};
