//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vprir::model::{ModelParams, RirOperator};
use vprir::signal::direct_convolve;

pub fn white(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Room-like parameters: three-tap microphone filter, RT60 near 0.2 s at 8 kHz.
pub fn room_params() -> ModelParams {
    ModelParams { g: vec![1.0, -0.3, 0.1], a: 3.0 * 10f64.ln() / 1600.0, p: vec![1.0, -1e-3], sigma_eps: 1.0, sigma_w: 1.0 }
}

pub fn room_rir(len: usize, seed: u64) -> Vec<f64> {
    let op = RirOperator::with_coherence(room_params(), len, false).expect("valid parameters");
    op.sample_rir(seed).expect("stable parameters")
}

/// Dry source, observation (noiseless) and the response that produced it.
pub fn problem(rir_len: usize, source_len: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let s = white(source_len, seed);
    let h = room_rir(rir_len, seed + 1);
    let y = direct_convolve(&s, &h);
    (s, y, h)
}
