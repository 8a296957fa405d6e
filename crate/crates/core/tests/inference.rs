use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vprir::inference::{
    adam_update, estimate_rir, estimate_rir_detailed, free_energy, loss_and_gradient, normalize, InferenceConfig,
    OptimState,
};
use vprir::model::{ModelParams, RirOperator};
use vprir::signal::{fft_convolve, unit_impulse};

fn white(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn config(len: usize, iterations: usize) -> InferenceConfig {
    InferenceConfig { rir_len: len, iterations, g_len: 3, p_len: 2, ..InferenceConfig::default() }
}

fn rel_err(est: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    num / truth.iter().map(|v| v * v).sum::<f64>()
}

/// A few seeded instances drawn from the model itself, plus additive noise.
fn instances() -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    (0..3)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = ModelParams {
                g: vec![1.0, rng.random_range(-0.3..0.3)],
                a: rng.random_range(0.05..0.15),
                p: vec![1.0, rng.random_range(0.0..0.1)],
                sigma_eps: 1.0,
                sigma_w: 1.0,
            };
            let h = RirOperator::with_coherence(theta, 24, false).unwrap().sample_rir(seed).unwrap();
            let s = white(&mut rng, 200);
            let mut y = fft_convolve(&s, &h);
            for v in y.iter_mut() {
                *v += 0.01 * rng.random_range(-1.0..1.0);
            }
            (y, s, h)
        })
        .collect()
}

#[test]
fn identity_channel_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let s = white(&mut rng, 400);
    let h = unit_impulse(32);
    let y = fft_convolve(&s, &h);
    let (state, mu) = estimate_rir(&y, &s, &config(32, 500)).unwrap();
    assert_eq!(state.loss_history.len(), 500);
    let err = rel_err(&mu, &h);
    assert!(err < 0.05, "relative error {err}");
}

#[test]
fn loss_decreases_on_every_instance() {
    for (y, s, _) in instances() {
        let (state, _) = estimate_rir(&y, &s, &config(24, 300)).unwrap();
        let first = state.loss_history[0];
        let last = *state.loss_history.last().unwrap();
        assert!(last < first, "{first} -> {last}");
    }
}

#[test]
fn moving_average_of_loss_never_rises() {
    for (y, s, _) in instances() {
        let (state, _) = estimate_rir(&y, &s, &config(24, 600)).unwrap();
        let hist = &state.loss_history;
        let avg: Vec<f64> = hist.windows(100).map(|w| w.iter().sum::<f64>() / 100.0).collect();
        for (i, w) in avg.windows(2).enumerate() {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "window {i}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn silent_source_shrinks_mean_toward_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let s = vec![0.0; 100];
    let y = white(&mut rng, 100 + 16 - 1);
    let (_, mu) = estimate_rir(&y, &s, &config(16, 300)).unwrap();
    let norm: f64 = mu.iter().map(|v| v * v).sum();
    assert!(norm < 0.5, "posterior mean energy {norm}");
}

#[test]
fn runs_are_deterministic() {
    let (y, s, _) = instances().remove(0);
    let a = estimate_rir_detailed(&y, &s, &config(24, 100)).unwrap();
    let b = estimate_rir_detailed(&y, &s, &config(24, 100)).unwrap();
    assert_eq!(a.rir, b.rir);
    assert_eq!(a.state, b.state);
}

#[test]
fn estimate_follows_input_scaling() {
    let (y, s, _) = instances().remove(1);
    let base = estimate_rir_detailed(&y, &s, &config(24, 200)).unwrap();
    let ys: Vec<f64> = y.iter().map(|v| v * 3.0).collect();
    let ss: Vec<f64> = s.iter().map(|v| v * 0.5).collect();
    let scaled = estimate_rir_detailed(&ys, &ss, &config(24, 200)).unwrap();
    for (a, b) in base.rir.iter().zip(&scaled.rir) {
        assert!((a * 6.0 - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn wrong_observation_length_is_rejected() {
    let s = vec![1.0; 10];
    assert!(estimate_rir(&vec![0.0; 10], &s, &config(4, 1)).is_err());
}

#[test]
fn loss_and_gradient_agree_with_free_energy() {
    let (y, s, _) = instances().remove(2);
    let cfg = config(24, 0);
    let state = OptimState::initial(&cfg);
    let (loss, grad) = loss_and_gradient(&state, &y, &s).unwrap();
    let vfe = free_energy(&state.theta, &state.z, &y, &s).unwrap();
    assert!((loss + 2.0 * vfe.total).abs() < 1e-9 * loss.abs());
    assert_eq!(grad.len(), state.layout().total());
}

#[test]
fn single_adam_step_moves_each_coordinate_by_lr() {
    let cfg = config(6, 0);
    let state = OptimState::initial(&cfg);
    let layout = state.layout();
    let grad = vec![1.0; layout.total()];
    let next = adam_update(&state, &grad, 1e-3, 0.9, 0.999, 1e-8);
    let before = layout.pack(&state.theta, &state.z);
    let after = layout.pack(&next.theta, &next.z);
    for (b, a) in before.iter().zip(&after) {
        assert!((b - a - 1e-3).abs() < 1e-9, "{b} -> {a}");
    }
    let still = adam_update(&state, &vec![0.0; layout.total()], 1e-3, 0.9, 0.999, 1e-8);
    assert_eq!(layout.pack(&still.theta, &still.z), before);
}

#[test]
fn normalize_floors_decay_and_pins_leading_taps() {
    let cfg = config(8, 0);
    let mut state = OptimState::initial(&cfg);
    state.theta.a = 0.0;
    state.theta.g[0] = 0.9;
    state.theta.p[0] = 1.1;
    let n = normalize(&state);
    assert_eq!(n.theta.a, 1e-8);
    assert_eq!(n.theta.g[0], 1.0);
    assert_eq!(n.theta.p[0], 1.0);
}
