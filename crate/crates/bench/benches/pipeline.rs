use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use phaseline_bench::{exponential_sum, line_samples, signal};
use phaseline_core::synth::{five_gaussian_sources, five_source_direction};
use phaseline_core::{
    apm, auto_step, retrieve_line, retrieve_nd, AdaptiveDirections, LineOptions, NdConfig,
    PronyConfig,
};

fn bench_apm(c: &mut Criterion) {
    let mut group = c.benchmark_group("apm");
    for l in [4usize, 12, 20] {
        let h = 0.3;
        let samples = exponential_sum(l, h).sample(h, 4 * l + 6);
        let config = PronyConfig::new(l, h);
        group.bench_with_input(BenchmarkId::from_parameter(l), &samples, |b, s| {
            b.iter(|| apm(black_box(s), &config).unwrap())
        });
    }
    group.finish();
}

fn bench_line(c: &mut Criterion) {
    let mut group = c.benchmark_group("retrieve_line");
    for n in [3usize, 5] {
        let (set, kernel) = line_samples(n, 199, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, s| {
            b.iter(|| retrieve_line(black_box(s), &kernel, n, &LineOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_nd(c: &mut Criterion) {
    let mut group = c.benchmark_group("retrieve_nd");
    group.sample_size(10);

    let truth = five_gaussian_sources();
    let mut config = NdConfig::new(5, auto_step(&truth.translations()), 99);
    config.adaptive = AdaptiveDirections::Fixed(vec![five_source_direction()]);
    group.bench_function("five_sources", |b| {
        b.iter(|| retrieve_nd(&truth, 2, truth.kernel(), &config).unwrap())
    });

    for dim in [2usize, 3] {
        let (s, h) = signal(dim, 4, 3);
        let mut config = NdConfig::new(4, h, 199);
        config.adaptive = AdaptiveDirections::Random { seed: 3 };
        group.bench_with_input(BenchmarkId::new("random_n4", dim), &s, |b, s| {
            b.iter(|| retrieve_nd(s, dim, s.kernel(), &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_apm, bench_line, bench_nd);
criterion_main!(benches);
