use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vprir::inference::{
    estimate_rir, evaluate, loss_and_gradient, InferenceConfig, ObjectiveOptions, OptimState, SufficientStats,
};
use vprir::model::VariationalParams;
use vprir_bench::{problem, room_params};

fn gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective");
    for len in [256, 1000] {
        let (s, y, h) = problem(len, 8000, 3);
        let z = VariationalParams { mu_h: h, r_h: vec![1e-3; len] };
        let state = OptimState::new(room_params(), z.clone());
        let stats = SufficientStats::new(&y, &s, len).unwrap();
        group.bench_with_input(BenchmarkId::new("sufficient_stats", len), &len, |b, &len| {
            b.iter(|| SufficientStats::new(black_box(&y), black_box(&s), len))
        });
        group.bench_with_input(BenchmarkId::new("evaluate", len), &len, |b, _| {
            b.iter(|| evaluate(black_box(&state.theta), black_box(&z), &stats, ObjectiveOptions::default()))
        });
        group.bench_with_input(BenchmarkId::new("loss_and_gradient", len), &len, |b, _| {
            b.iter(|| loss_and_gradient(black_box(&state), black_box(&y), black_box(&s)))
        });
    }
    group.finish();
}

fn short_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    let (s, y, _) = problem(256, 8000, 4);
    let cfg = InferenceConfig { rir_len: 256, iterations: 100, ..InferenceConfig::default() };
    group.bench_function("100_iterations_256", |b| b.iter(|| estimate_rir(black_box(&y), black_box(&s), &cfg)));
    group.finish();
}

criterion_group!(benches, gradient, short_fit);
criterion_main!(benches);
