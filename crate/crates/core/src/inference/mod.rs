//! Variational estimation of the response and the model parameters.

mod adam;
mod estimate;
mod objective;
mod vfe;

pub use adam::{AdamConfig, AdamMoments};
pub use estimate::{
    adam_update, estimate_rir, estimate_rir_detailed, loss_and_gradient, normalize, Estimate, InferenceConfig,
    OptimState, MIN_DECAY_RATE,
};
pub use objective::{evaluate, Evaluation, ObjectiveOptions, SufficientStats, TrainableLayout};
pub use vfe::{expected_residual, free_energy, free_energy_with, VfeBreakdown};
