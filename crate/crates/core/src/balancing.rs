//! Stage 2 of the pipeline: rebalance tour durations against the goal by
//! stripping the last trip of every tour and re-attaching the stripped trips
//! via a minimum-weight perfect matching. The tour count never changes, and
//! the aggregate over-goal time never increases, because keeping every tail
//! on its own tour is always one of the candidate matchings.

use crate::assignment::{min_weight_perfect_matching, CostMatrix};
use crate::model::{hard_violations, tour_duration, Instance, Schedule, Sec, Tour};

/// A schedule split for the balancing step: per tour, its prefix (possibly
/// empty for singleton tours) and its removed last trip. `origin[k]` names
/// the tour that tail `k` came from; re-attaching `tails[k]` to `heads[k]`
/// reproduces the input schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrippedView {
    pub heads: Vec<Vec<usize>>,
    pub tails: Vec<usize>,
    pub origin: Vec<usize>,
}

/// Strip the last trip from each tour, in tour order.
pub fn strip(schedule: &Schedule) -> StrippedView {
    let mut heads = Vec::with_capacity(schedule.n_tours());
    let mut tails = Vec::with_capacity(schedule.n_tours());
    for tour in schedule.tours() {
        let ids = tour.trip_ids();
        heads.push(ids[..ids.len() - 1].to_vec());
        tails.push(ids[ids.len() - 1]);
    }
    let origin = (0..schedule.n_tours()).collect();
    StrippedView {
        heads,
        tails,
        origin,
    }
}

/// Weight of re-attaching `tail` to `head`, or `None` when the junction is
/// not time-feasible. The weight is the new tour's over-goal time, clamped at
/// zero; an empty head accepts any tail and weighs the tail alone.
///
/// Trip indices must be valid for `inst`.
pub fn balance_cost(head: &[usize], tail: usize, inst: &Instance) -> Option<Sec> {
    let duration = match head.last() {
        None => inst.trip(tail).duration_s,
        Some(&last) => {
            if !inst
                .compatible(last, tail)
                .expect("balance_cost requires valid distinct trip indices")
            {
                return None;
            }
            tour_duration(head, inst).expect("head trips must be valid")
                + inst.d(last, tail)
                + inst.trip(tail).duration_s
        }
    };
    Some((duration - inst.goal_s()).max(0))
}

/// One balancing pass. The output has the same number of tours, its
/// aggregate over-goal time is at most the input's, and it remains a valid
/// schedule. A schedule whose tours are all within the goal comes back
/// unchanged: every weight on the identity diagonal is zero and the
/// tie-break keeps the identity.
pub fn rebalance(schedule: &Schedule, inst: &Instance) -> Schedule {
    debug_assert!(
        hard_violations(schedule, inst).is_empty(),
        "rebalance requires a valid schedule"
    );
    let k = schedule.n_tours();
    if k == 0 {
        return schedule.clone();
    }

    let view = strip(schedule);
    let head_durations: Vec<Sec> = view
        .heads
        .iter()
        .map(|h| {
            if h.is_empty() {
                0
            } else {
                tour_duration(h, inst).expect("schedule tours are valid")
            }
        })
        .collect();

    let mut weights = CostMatrix::infeasible(k);
    for (a, head) in view.heads.iter().enumerate() {
        for (b, &tail) in view.tails.iter().enumerate() {
            let weight = match head.last() {
                None => Some((inst.trip(tail).duration_s - inst.goal_s()).max(0)),
                Some(&last) => inst.compatible_raw(last, tail).then(|| {
                    let dur =
                        head_durations[a] + inst.d(last, tail) + inst.trip(tail).duration_s;
                    (dur - inst.goal_s()).max(0)
                }),
            };
            if let Some(w) = weight {
                weights.set(a, b, w);
            }
        }
    }

    let matching = min_weight_perfect_matching(&weights)
        .expect("the identity matching keeps every tail on its own tour");

    let tours = view
        .heads
        .iter()
        .enumerate()
        .map(|(a, head)| {
            let mut ids = head.clone();
            ids.push(view.tails[matching.assignment[a]]);
            Tour::new(ids).expect("tails are distinct from every head")
        })
        .collect();
    Schedule::new(tours)
}

/// Apply the balancing pass `passes` times. Each pass preserves the tour
/// count and never increases the aggregate over-goal time.
pub fn rebalance_passes(schedule: &Schedule, inst: &Instance, passes: usize) -> Schedule {
    let mut current = schedule.clone();
    for _ in 0..passes {
        let next = rebalance(&current, inst);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::block;
    use crate::fixtures;
    use crate::model::{from_minutes, validate_schedule};

    #[test]
    fn strip_shapes() {
        let inst = fixtures::e1();
        let s = block(&inst);
        let v = strip(&s);
        assert_eq!(v.heads, vec![vec![0, 1]]);
        assert_eq!(v.tails, vec![2]);
        assert_eq!(v.origin, vec![0]);

        let singles = fixtures::singletons_minutes(&[30.0, 40.0], 75.0);
        let s = block(&singles);
        let v = strip(&s);
        assert_eq!(v.heads, vec![Vec::<usize>::new(), Vec::new()]);
        assert_eq!(v.tails, vec![0, 1]);

        // reattaching tails[k] to heads[k] reproduces the input
        let inst = fixtures::w1();
        let s = block(&inst);
        let v = strip(&s);
        let rebuilt: Vec<Vec<usize>> = v
            .heads
            .iter()
            .zip(&v.tails)
            .map(|(h, &t)| {
                let mut ids = h.clone();
                ids.push(t);
                ids
            })
            .collect();
        let original: Vec<Vec<usize>> =
            s.tours().iter().map(|t| t.trip_ids().to_vec()).collect();
        assert_eq!(rebuilt, original);
    }

    #[test]
    fn balance_cost_worked_example() {
        let inst = fixtures::w1();
        // head [a1] with tail b2: 40 + 5 + 20 = 65 minutes, under goal
        assert_eq!(balance_cost(&[0], 3, &inst), Some(0));
        // head [b1] with tail a2: 30 + 10 + 45 = 85 minutes, 10 over
        assert_eq!(balance_cost(&[2], 1, &inst), Some(from_minutes(10.0)));
        // identity attachments reproduce the original excesses
        assert_eq!(balance_cost(&[0], 1, &inst), Some(from_minutes(15.0)));
        assert_eq!(balance_cost(&[2], 3, &inst), Some(0));
    }

    #[test]
    fn balance_cost_singleton_clamp() {
        let inst = fixtures::singletons_minutes(&[80.0], 75.0);
        assert_eq!(balance_cost(&[], 0, &inst), Some(from_minutes(5.0)));
        let inst = fixtures::singletons_minutes(&[70.0], 75.0);
        assert_eq!(balance_cost(&[], 0, &inst), Some(0));
    }

    #[test]
    fn balance_cost_infeasible_junction() {
        let inst = fixtures::w1();
        // a2 ends long after b2 starts
        assert_eq!(balance_cost(&[1], 3, &inst), None);
    }

    #[test]
    fn w1_swap_drops_excess() {
        let inst = fixtures::w1();
        let before = block(&inst);
        assert_eq!(before.total_excess_s(&inst).unwrap(), from_minutes(15.0));
        let after = rebalance(&before, &inst);
        assert_eq!(after.n_tours(), 2);
        assert_eq!(after.tours()[0].trip_ids(), &[0, 3]);
        assert_eq!(after.tours()[1].trip_ids(), &[2, 1]);
        assert_eq!(after.total_excess_s(&inst).unwrap(), from_minutes(10.0));
        assert!(validate_schedule(&after, &inst).is_empty());
    }

    #[test]
    fn under_goal_schedule_is_fixed_point() {
        let inst = fixtures::e1();
        let mut relaxed = inst.clone();
        relaxed.set_goal_s(from_minutes(120.0)).unwrap();
        let before = block(&relaxed);
        let after = rebalance(&before, &relaxed);
        assert_eq!(before, after);
    }

    #[test]
    fn single_tour_schedule_unchanged() {
        let inst = fixtures::e1();
        let before = block(&inst);
        assert_eq!(before.n_tours(), 1);
        let after = rebalance(&before, &inst);
        assert_eq!(before, after);
    }

    #[test]
    fn passes_preserve_monotonicity() {
        for seed in 0..10 {
            let inst = fixtures::random_small(10, seed);
            let s0 = block(&inst);
            let mut prev = s0.total_excess_s(&inst).unwrap();
            let mut s = s0;
            for _ in 0..3 {
                s = rebalance(&s, &inst);
                let cur = s.total_excess_s(&inst).unwrap();
                assert!(cur <= prev);
                prev = cur;
            }
        }
    }
}
