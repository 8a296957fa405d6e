use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vprir::inference::{evaluate, free_energy, ObjectiveOptions, SufficientStats, TrainableLayout};
use vprir::model::{ModelParams, VariationalParams};

fn problem(seed: u64, len: usize, obs: usize) -> (ModelParams, VariationalParams, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = ModelParams {
        g: vec![1.0, rng.random_range(-0.4..0.4), rng.random_range(-0.2..0.2)],
        a: rng.random_range(0.005..0.05),
        p: vec![1.0, rng.random_range(-0.1..0.1)],
        sigma_eps: rng.random_range(0.5..1.5),
        sigma_w: rng.random_range(0.2..1.0),
    };
    let z = VariationalParams {
        mu_h: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        r_h: (0..len).map(|_| rng.random_range(0.1..2.0)).collect(),
    };
    let s: Vec<f64> = (0..obs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..obs + len - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    (theta, z, y, s)
}

fn loss_at(layout: &TrainableLayout, flat: &[f64], y: &[f64], s: &[f64]) -> f64 {
    let (theta, z) = layout.unpack(flat);
    -2.0 * free_energy(&theta, &z, y, s).unwrap().total
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for seed in 0..3 {
        let (theta, z, y, s) = problem(seed, 24, 60);
        let stats = SufficientStats::new(&y, &s, z.len()).unwrap();
        let options = ObjectiveOptions { coherence_zeros: true, train_sigma_w: true };
        let eval = evaluate(&theta, &z, &stats, options).unwrap();
        let layout = TrainableLayout::of(&theta, &z);
        let flat = layout.pack(&theta, &z);
        let loss = loss_at(&layout, &flat, &y, &s);
        assert!((loss - eval.loss).abs() < 1e-9 * loss.abs().max(1.0), "{loss} vs {}", eval.loss);
        for i in 0..flat.len() {
            let h = 1e-5 * flat[i].abs().max(1.0);
            let mut plus = flat.clone();
            plus[i] += h;
            let mut minus = flat.clone();
            minus[i] -= h;
            let fd = (loss_at(&layout, &plus, &y, &s) - loss_at(&layout, &minus, &y, &s)) / (2.0 * h);
            let an = eval.gradient[i];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
            assert!(rel < 1e-5, "seed {seed} index {i}: analytic {an}, numeric {fd}, rel {rel}");
        }
    }
}

#[test]
fn twenty_small_instances_within_tolerance() {
    let mut worst = 0.0f64;
    for seed in 100..120 {
        let (theta, z, y, s) = problem(seed, 12, 30);
        let stats = SufficientStats::new(&y, &s, z.len()).unwrap();
        let eval = evaluate(&theta, &z, &stats, ObjectiveOptions::default()).unwrap();
        let layout = TrainableLayout::of(&theta, &z);
        let flat = layout.pack(&theta, &z);
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += 1e-5;
            let mut minus = flat.clone();
            minus[i] -= 1e-5;
            let fd = (loss_at(&layout, &plus, &y, &s) - loss_at(&layout, &minus, &y, &s)) / 2e-5;
            worst = worst.max((eval.gradient[i] - fd).abs() / fd.abs().max(1.0));
        }
    }
    assert!(worst < 1e-5, "worst error {worst}");
}
