use busched_core::assignment::{min_cost_max_cardinality, min_weight_perfect_matching, CostMatrix};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn dense_matrix(n: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost = (0..n * n).map(|_| rng.random_range(0..10_000)).collect();
    CostMatrix::dense(n, cost)
}

fn sparse_matrix(n: usize, density_pct: u32, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CostMatrix::infeasible(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_range(0..100) < density_pct {
                m.set(i, j, rng.random_range(0..10_000));
            }
        }
    }
    m
}

fn bench_perfect_matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_weight_perfect_matching");
    group.sample_size(10);
    for &n in &[100usize, 300, 600] {
        let m = dense_matrix(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| min_weight_perfect_matching(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn bench_max_cardinality(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_cost_max_cardinality");
    group.sample_size(10);
    for &n in &[100usize, 300] {
        let m = sparse_matrix(n, 30, 5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| min_cost_max_cardinality(black_box(m)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_perfect_matching, bench_max_cardinality);
criterion_main!(benches);
