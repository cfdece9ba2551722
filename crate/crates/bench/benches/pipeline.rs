use busched_bench::hcpss_instance;
use busched_core::balancing::rebalance;
use busched_core::blocking::block;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_blocking(c: &mut Criterion) {
    let mut group = c.benchmark_group("blocking");
    group.sample_size(10);
    for &n in &[100usize, 250, 500] {
        let inst = hcpss_instance(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| block(black_box(inst)))
        });
    }
    group.finish();
}

fn bench_balancing(c: &mut Criterion) {
    let mut group = c.benchmark_group("balancing");
    group.sample_size(10);
    for &n in &[250usize, 500, 994] {
        let inst = hcpss_instance(n, 1);
        let schedule = block(&inst);
        group.bench_with_input(
            BenchmarkId::from_parameter(n),
            &(&schedule, &inst),
            |b, (schedule, inst)| b.iter(|| rebalance(black_box(schedule), black_box(inst))),
        );
    }
    group.finish();
}

fn bench_end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    let inst = hcpss_instance(250, 1);
    group.bench_function("solve_250", |b| {
        b.iter(|| {
            let s = block(black_box(&inst));
            rebalance(&s, &inst)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_blocking, bench_balancing, bench_end_to_end);
criterion_main!(benches);
