//! Latency of the kernel front end: parsing, combiner analysis, and the
//! two together, over the seven embedded benchmark reducers.
//!
//! The analysis runs once per job submission in the engine, so its cost is
//! paid on every run; these benches keep it honest (well under a
//! millisecond per kernel).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mapfold_core::bench::{kernel_source, BenchId};
use mapfold_core::kernel::parse_kernel;
use mapfold_core::optimizer::analyze;
use std::hint::black_box;
use std::time::Duration;

fn parse(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse");
    group.warm_up_time(Duration::from_millis(500));
    group.measurement_time(Duration::from_secs(2));
    for id in BenchId::ALL {
        let source = kernel_source(id);
        group.bench_with_input(BenchmarkId::from_parameter(id.name()), &source, |b, src| {
            b.iter(|| parse_kernel(black_box(src)).unwrap());
        });
    }
    group.finish();
}

fn analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.warm_up_time(Duration::from_millis(500));
    group.measurement_time(Duration::from_secs(2));
    for id in BenchId::ALL {
        let kernel = parse_kernel(kernel_source(id)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(id.name()), &kernel, |b, k| {
            b.iter(|| analyze(black_box(k)));
        });
    }
    group.finish();
}

fn parse_and_analyze(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse+analyze");
    group.warm_up_time(Duration::from_millis(500));
    group.measurement_time(Duration::from_secs(2));
    for id in BenchId::ALL {
        let source = kernel_source(id);
        group.bench_with_input(BenchmarkId::from_parameter(id.name()), &source, |b, src| {
            b.iter(|| analyze(&parse_kernel(black_box(src)).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, parse, analysis, parse_and_analyze);
criterion_main!(benches);
