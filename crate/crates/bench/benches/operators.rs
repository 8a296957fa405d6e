use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vprir::model::{p_apply, p_solve, toeplitz_apply, toeplitz_solve, RirOperator};
use vprir_bench::{room_params, white};

fn structured(c: &mut Criterion) {
    let mut group = c.benchmark_group("structured");
    for len in [256, 1000, 4000] {
        let x = white(len, 1);
        let g = [1.0, 0.0, -0.9, 0.1];
        let p = [1.0, -1e-3, 2e-4];
        group.bench_with_input(BenchmarkId::new("toeplitz_apply", len), &x, |b, x| {
            b.iter(|| toeplitz_apply(black_box(&g), black_box(x)))
        });
        group.bench_with_input(BenchmarkId::new("toeplitz_solve", len), &x, |b, x| {
            b.iter(|| toeplitz_solve(black_box(&g), black_box(x)))
        });
        group.bench_with_input(BenchmarkId::new("p_apply", len), &x, |b, x| b.iter(|| p_apply(black_box(&p), black_box(x))));
        group.bench_with_input(BenchmarkId::new("p_solve", len), &x, |b, x| b.iter(|| p_solve(black_box(&p), black_box(x))));
    }
    group.finish();
}

fn composite(c: &mut Criterion) {
    let mut group = c.benchmark_group("composite");
    for len in [256, 1000] {
        let x = white(len, 2);
        group.bench_with_input(BenchmarkId::new("build", len), &len, |b, &len| {
            b.iter(|| RirOperator::new(room_params(), black_box(len)))
        });
        let op = RirOperator::new(room_params(), len).unwrap();
        group.bench_with_input(BenchmarkId::new("v_apply", len), &x, |b, x| b.iter(|| op.v_apply(black_box(x))));
        group.bench_with_input(BenchmarkId::new("v_apply_transpose", len), &x, |b, x| {
            b.iter(|| op.v_apply_transpose(black_box(x)))
        });
        group.bench_with_input(BenchmarkId::new("v_solve", len), &x, |b, x| b.iter(|| op.v_solve(black_box(x))));
    }
    group.finish();
}

criterion_group!(benches, structured, composite);
criterion_main!(benches);
