//! Small hand-checkable instances shared by unit tests, the acceptance
//! suite, and the benchmarks.

use crate::generator::{generate, GeneratorParams};
use crate::model::{from_minutes, DeadheadMatrix, Instance, Trip};

/// Build an instance from minute-valued trips `(start, duration)` and a
/// minute-valued deadhead matrix.
pub fn instance_minutes(trips: &[(f64, f64)], deadhead: &[Vec<f64>], goal: f64) -> Instance {
    let trips: Vec<Trip> = trips
        .iter()
        .enumerate()
        .map(|(id, &(start, dur))| Trip {
            id,
            start_s: from_minutes(start),
            duration_s: from_minutes(dur),
        })
        .collect();
    let rows: Vec<Vec<i64>> = deadhead
        .iter()
        .map(|row| row.iter().map(|&m| from_minutes(m)).collect())
        .collect();
    let dm = DeadheadMatrix::from_rows(rows).expect("fixture deadhead matrix");
    Instance::new(trips, dm, from_minutes(goal), None).expect("fixture instance")
}

/// Three trips that chain into a single 120-minute tour: starts 0/40/100,
/// durations 30/20/25, forward deadheads 10/20/35 minutes.
pub fn e1() -> Instance {
    instance_minutes(
        &[(0.0, 30.0), (40.0, 20.0), (100.0, 25.0)],
        &[
            vec![0.0, 10.0, 20.0],
            vec![10.0, 0.0, 35.0],
            vec![10.0, 10.0, 0.0],
        ],
        75.0,
    )
}

/// Four trips forming two tours whose last trips can be swapped to cut the
/// aggregate over-goal time from 15 to 10 minutes at a 75-minute goal.
pub fn w1() -> Instance {
    // trips: 0 = a1, 1 = a2, 2 = b1, 3 = b2
    instance_minutes(
        &[(0.0, 40.0), (50.0, 45.0), (0.0, 30.0), (45.0, 20.0)],
        &[
            vec![0.0, 5.0, 10.0, 5.0],
            vec![10.0, 0.0, 10.0, 10.0],
            vec![10.0, 10.0, 0.0, 5.0],
            vec![10.0, 10.0, 10.0, 0.0],
        ],
        75.0,
    )
}

/// Mutually incompatible trips with the given durations, so every schedule
/// is the all-singletons one.
pub fn singletons_minutes(durations: &[f64], goal: f64) -> Instance {
    let far = 100_000.0;
    let trips: Vec<(f64, f64)> = durations
        .iter()
        .enumerate()
        .map(|(i, &d)| (i as f64 * 10.0, d))
        .collect();
    let n = durations.len();
    let deadhead: Vec<Vec<f64>> = (0..n).map(|_| vec![far; n]).collect();
    instance_minutes(&trips, &deadhead, goal)
}

/// A seeded random instance small enough for exhaustive checking, with
/// enough schools that compatible pairs actually occur.
pub fn random_small(n: usize, seed: u64) -> Instance {
    let mut params = GeneratorParams::hcpss(n);
    params.n_schools = (n / 2).max(2);
    params.seed = seed;
    generate(&params).expect("fixture generator params")
}
