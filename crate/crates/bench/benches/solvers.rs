use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horizon_bench::{metric, operator, scan_inputs};
use horizon_core::blowup::{blowup_scan, default_r_max, geometric_levels, ScanSettings};
use horizon_core::distance::distance_field;
use horizon_core::functionals::{reduced_quotient_j, ReducedQuadrature, F0};
use horizon_core::green::{green_function, GreenSettings};
use horizon_core::linalg::{pcg, CgSettings};
use horizon_core::{build_metric, HopfGrid, MetricSpec};

fn bench_metric(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_metric");
    for n in [64, 128] {
        let grid = HopfGrid::square(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| build_metric(black_box(&MetricSpec::berger(0.3)), grid).unwrap())
        });
    }
    group.finish();
}

fn bench_cg(c: &mut Criterion) {
    let mut group = c.benchmark_group("pcg");
    group.sample_size(20);
    for n in [64, 128] {
        let op = operator(&metric(&MetricSpec::berger(0.3), n));
        let rhs = op.mass.clone();
        group.bench_with_input(BenchmarkId::from_parameter(n), &op, |b, op| {
            b.iter(|| {
                let mut x = vec![0.0; rhs.len()];
                pcg(&op.matrix, black_box(&rhs), &mut x, CgSettings::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_green(c: &mut Criterion) {
    let mut group = c.benchmark_group("green_function");
    group.sample_size(10);
    for n in [64, 128] {
        let m = metric(&MetricSpec::berger(0.3), n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| green_function(black_box(m), GreenSettings::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_marching");
    group.sample_size(20);
    for n in [64, 128] {
        let m = metric(&MetricSpec::berger(0.3), n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| distance_field(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn bench_scan(c: &mut Criterion) {
    let spec = MetricSpec::berger(0.1);
    let (m, g, d) = scan_inputs(&spec, 128);
    let levels = geometric_levels(default_r_max(&spec), 1e-3, 48);
    let settings = ScanSettings::default();
    let mut group = c.benchmark_group("blowup_scan");
    group.sample_size(10);
    group.bench_function("berger_0.1_n128", |b| {
        b.iter(|| blowup_scan(&m, &g, &d, black_box(&levels), &settings).unwrap())
    });
    group.finish();
}

fn bench_reduced(c: &mut Criterion) {
    let quad = ReducedQuadrature::default();
    c.bench_function("reduced_quotient_f0", |b| {
        b.iter(|| reduced_quotient_j(black_box(&F0), &quad).unwrap())
    });
}

criterion_group!(
    benches,
    bench_metric,
    bench_cg,
    bench_green,
    bench_distance,
    bench_scan,
    bench_reduced
);
criterion_main!(benches);
