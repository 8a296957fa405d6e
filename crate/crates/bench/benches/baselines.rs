use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vprir::baselines::{crossband_deconvolution, istft, spectral_deconvolution, stft, StftConfig};
use vprir::metrics::compare;
use vprir_bench::{problem, white};

fn transforms(c: &mut Criterion) {
    let cfg = StftConfig::default();
    let x = white(8000, 5);
    let spec = stft(&x, &cfg).unwrap();
    c.bench_function("stft_8000", |b| b.iter(|| stft(black_box(&x), &cfg)));
    c.bench_function("istft_8000", |b| b.iter(|| istft(black_box(&spec), &cfg, x.len())));
}

fn deconvolution(c: &mut Criterion) {
    let cfg = StftConfig::default();
    let mut group = c.benchmark_group("baselines");
    group.sample_size(20);
    for len in [256, 1000] {
        let (s, y, _) = problem(len, 16000, 6);
        group.bench_with_input(BenchmarkId::new("spectral", len), &len, |b, &len| {
            b.iter(|| spectral_deconvolution(black_box(&y), black_box(&s), len, &cfg))
        });
        for bands in [1, 2] {
            group.bench_with_input(BenchmarkId::new(format!("crossband_k{bands}"), len), &len, |b, &len| {
                b.iter(|| crossband_deconvolution(black_box(&y), black_box(&s), len, &cfg, bands, 1e-6))
            });
        }
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let (_, _, h) = problem(1000, 2000, 7);
    let est: Vec<f64> = h.iter().zip(white(1000, 8)).map(|(v, n)| v + 1e-3 * n).collect();
    let cfg = StftConfig::edr_default();
    c.bench_function("compare_1000", |b| b.iter(|| compare(black_box(&h), black_box(&est), 8000.0, &cfg)));
}

criterion_group!(benches, transforms, deconvolution, metrics);
criterion_main!(benches);
