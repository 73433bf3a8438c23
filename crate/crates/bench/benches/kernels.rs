use std::hint::black_box;

use chd_bench::{random_skeleton, torus};
use chd_core::emd::emd;
use chd_core::skeleton::skeletonize;
use chd_core::volume::distance_transform;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_emd(c: &mut Criterion) {
    let mut g = c.benchmark_group("emd");
    for n in [32, 64, 128] {
        let (a, b) = (random_skeleton(n, 1), random_skeleton(n, 2));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| emd(black_box(&a), black_box(&b)).unwrap())
        });
    }
    g.finish();
}

fn bench_edt(c: &mut Criterion) {
    let mut g = c.benchmark_group("edt");
    for n in [32, 64, 128] {
        let m = torus(n, n as f64 / 8.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| distance_transform(black_box(&m)))
        });
    }
    g.finish();
}

fn bench_thinning(c: &mut Criterion) {
    let mut g = c.benchmark_group("thinning");
    g.sample_size(10);
    for n in [32, 64] {
        let m = torus(n, n as f64 / 8.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| skeletonize(black_box(&m)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_emd, bench_edt, bench_thinning);
criterion_main!(benches);
