use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rrg_bench::regular;
use rrg_core::counting::{count_perfect_matchings, count_triangles};
use rrg_core::coupling::maximal_coupling;
use rrg_core::oracle::{class_distribution, enumerate_regular, exact_distribution};
use rrg_core::samplers::{sample_nu, sample_regular};
use rrg_core::{canonical_key, Caps, MeasureExpr, SeededStream};

fn samplers(c: &mut Criterion) {
    let caps = Caps::default();
    let mut group = c.benchmark_group("sample_regular");
    for (n, d) in [(100, 3), (1000, 3), (100, 6)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_d{d}")), &(n, d), |b, &(n, d)| {
            let mut rng = SeededStream::new(1, 0);
            b.iter(|| sample_regular(n, d, &mut rng, &caps).unwrap());
        });
    }
    group.finish();
    c.bench_function("sample_nu/n100_d3", |b| {
        let mut rng = SeededStream::new(1, 0);
        b.iter(|| sample_nu(100, 3, &mut rng, &caps).unwrap());
    });
}

fn counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("perfect_matchings");
    for n in [16, 24, 28] {
        let g = regular(n, 3, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| count_perfect_matchings(black_box(g)).unwrap()));
    }
    group.finish();
    let g = regular(1000, 5, 7);
    c.bench_function("triangles/n1000_d5", |b| b.iter(|| count_triangles(black_box(&g))));
}

fn canonical(c: &mut Criterion) {
    let mut group = c.benchmark_group("canonical_key");
    for n in [8, 12, 16] {
        let g = regular(n, 3, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| canonical_key(black_box(g)).unwrap()));
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let caps = Caps::default();
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("enumerate_n8_d3", |b| b.iter(|| enumerate_regular(8, 3, &caps).unwrap()));
    group.bench_function("mu2_oplus_mu1_n8", |b| b.iter(|| exact_distribution(&"mu2+mu1".parse().unwrap(), 8, &caps).unwrap()));
    let nu = exact_distribution(&MeasureExpr::nu(3), 8, &caps).unwrap();
    group.bench_function("classes_nu3_n8", |b| b.iter(|| class_distribution(&nu).unwrap()));
    let mu = exact_distribution(&MeasureExpr::mu(3), 8, &caps).unwrap();
    group.bench_function("maximal_coupling_n8", |b| b.iter(|| maximal_coupling(&mu.to_measure(), &nu.to_measure()).unwrap()));
    group.finish();
}

criterion_group!(benches, samplers, counting, canonical, oracle);
criterion_main!(benches);
