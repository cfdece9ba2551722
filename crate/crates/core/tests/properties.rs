//! Cross-module properties that don't belong to any single unit: the
//! two-stage heuristic against the exact oracle, and pipeline determinism at
//! a size the unit tests don't reach.

use busched_core::balancing::{rebalance, rebalance_passes};
use busched_core::blocking::block;
use busched_core::generator::{generate, GeneratorParams};
use busched_core::mip::exact_solve_small;
use busched_core::model::validate_schedule;
use busched_core::Instance;

fn random_instance(n: usize, seed: u64) -> Instance {
    let mut params = GeneratorParams::hcpss(n);
    params.n_schools = (n / 2).max(2);
    params.seed = seed;
    generate(&params).expect("valid generator params")
}

fn heuristic_objective(inst: &Instance) -> f64 {
    let schedule = rebalance(&block(inst), inst);
    let excess_minutes = schedule.total_excess_s(inst).unwrap() as f64 / 60.0;
    inst.bus_penalty() as f64 * schedule.n_tours() as f64
        + inst.excess_penalty() as f64 * excess_minutes
}

#[test]
fn heuristic_never_beats_the_oracle() {
    let mut max_gap_pct: f64 = 0.0;
    let mut total_gap_pct = 0.0;
    let trials = 40u64;
    for trial in 0..trials {
        let n = 5 + (trial as usize % 4); // 5..=8
        let inst = random_instance(n, 0x0D0 + trial);
        let oracle = exact_solve_small(&inst, u64::MAX);
        assert!(oracle.proven_optimal);
        let heuristic = heuristic_objective(&inst);
        assert!(
            heuristic >= oracle.objective - 1e-9,
            "trial {trial}: heuristic {heuristic} beat oracle {}",
            oracle.objective
        );
        let gap = (heuristic - oracle.objective) / oracle.objective * 100.0;
        max_gap_pct = max_gap_pct.max(gap);
        total_gap_pct += gap;
    }
    println!(
        "heuristic vs oracle gap over {trials} instances: avg {:.2}%, max {:.2}%",
        total_gap_pct / trials as f64,
        max_gap_pct
    );
}

#[test]
fn pipeline_is_deterministic_and_valid_at_medium_size() {
    let inst = random_instance(120, 0xBEEF);
    let a = rebalance(&block(&inst), &inst);
    let b = rebalance(&block(&inst), &inst);
    assert_eq!(a, b);
    assert!(validate_schedule(&a, &inst).is_empty());
}

#[test]
fn extra_passes_keep_improving_or_stop() {
    for seed in 0..8u64 {
        let inst = random_instance(60, 0xAB + seed);
        let s0 = block(&inst);
        let one = rebalance(&s0, &inst);
        let many = rebalance_passes(&s0, &inst, 4);
        assert!(
            many.total_excess_s(&inst).unwrap() <= one.total_excess_s(&inst).unwrap(),
            "seed {seed}"
        );
        assert_eq!(many.n_tours(), s0.n_tours());
        assert!(validate_schedule(&many, &inst).is_empty());
    }
}
