//! Domain model shared by every solver stage: trips, deadheads, instances,
//! tours, schedules, and the duration arithmetic they agree on.
//!
//! All times are fixed-point seconds (`Sec`). Minutes appear only at
//! reporting and file boundaries, so every comparison inside the solvers is
//! exact integer arithmetic.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Fixed-point time in whole seconds.
pub type Sec = i64;

/// Default annual penalty for dispatching one additional bus.
pub const DEFAULT_BUS_PENALTY: i64 = 60_000;
/// Default annual penalty per minute a tour runs over the goal.
pub const DEFAULT_EXCESS_PENALTY: i64 = 150;

/// Seconds to fractional minutes, for reporting.
pub fn minutes(s: Sec) -> f64 {
    s as f64 / 60.0
}

/// Fractional minutes to the nearest whole second.
pub fn from_minutes(min: f64) -> Sec {
    (min * 60.0).round() as Sec
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("trip index {index} out of range for {n} trips")]
    TripIndexOutOfRange { index: usize, n: usize },
    #[error("trip pair ({0}, {0}) must name two distinct trips")]
    SameTrip(usize),
    #[error("tour is empty")]
    EmptyTour,
    #[error("trip {0} appears more than once in a tour")]
    DuplicateTrip(usize),
    #[error("deadhead matrix has dimension {actual} but the instance has {expected} trips")]
    DeadheadDimension { expected: usize, actual: usize },
    #[error("deadhead matrix rows must all have length {expected}")]
    RaggedDeadhead { expected: usize },
    #[error("deadhead ({i}, {j}) is negative")]
    NegativeDeadhead { i: usize, j: usize },
    #[error("trip {0} has non-positive duration")]
    NonPositiveDuration(usize),
    #[error("trip {0}: start + duration overflows the time range")]
    TimeOverflow(usize),
    #[error("goal duration must be positive")]
    NonPositiveGoal,
    #[error("max chain length must be at least 2")]
    MaxChainTooSmall,
    #[error("trip at position {position} has id {id}; ids must be 0..n in order")]
    MisnumberedTrip { position: usize, id: usize },
    #[error("penalties must be non-negative")]
    NegativePenalty,
}

/// A fixed afternoon trip: leaves its school at `start_s` and carries
/// students for `duration_s`. Trips are opaque intervals; their internal
/// stop sequence is never altered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trip {
    pub id: usize,
    pub start_s: Sec,
    pub duration_s: Sec,
}

impl Trip {
    /// Time the last student is dropped off.
    pub fn end_s(&self) -> Sec {
        self.start_s + self.duration_s
    }
}

/// Directed empty-travel times from each trip's end point to each trip's
/// start school, in seconds. The diagonal is stored but never read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadheadMatrix {
    n: usize,
    entries: Vec<Sec>,
}

impl DeadheadMatrix {
    pub fn new(n: usize, entries: Vec<Sec>) -> Result<Self, ModelError> {
        if entries.len() != n * n {
            return Err(ModelError::DeadheadDimension {
                expected: n,
                actual: entries.len().checked_div(n).unwrap_or(0),
            });
        }
        for (idx, &e) in entries.iter().enumerate() {
            if e < 0 {
                return Err(ModelError::NegativeDeadhead {
                    i: idx / n,
                    j: idx % n,
                });
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Sec>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(ModelError::RaggedDeadhead { expected: n });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Sec {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<Sec>> {
        (0..self.n)
            .map(|i| self.entries[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

/// Full problem input: the fixed trips, the deadhead matrix, the duration
/// goal, an optional cap on trips per tour, and the objective penalties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    trips: Vec<Trip>,
    deadhead: DeadheadMatrix,
    goal_s: Sec,
    max_chain: Option<usize>,
    bus_penalty: i64,
    excess_penalty: i64,
}

impl Instance {
    pub fn new(
        trips: Vec<Trip>,
        deadhead: DeadheadMatrix,
        goal_s: Sec,
        max_chain: Option<usize>,
    ) -> Result<Self, ModelError> {
        if deadhead.n() != trips.len() {
            return Err(ModelError::DeadheadDimension {
                expected: trips.len(),
                actual: deadhead.n(),
            });
        }
        if goal_s <= 0 {
            return Err(ModelError::NonPositiveGoal);
        }
        if let Some(b) = max_chain {
            if b < 2 {
                return Err(ModelError::MaxChainTooSmall);
            }
        }
        for (pos, trip) in trips.iter().enumerate() {
            if trip.id != pos {
                return Err(ModelError::MisnumberedTrip {
                    position: pos,
                    id: trip.id,
                });
            }
            if trip.duration_s <= 0 {
                return Err(ModelError::NonPositiveDuration(pos));
            }
            if trip.start_s.checked_add(trip.duration_s).is_none() {
                return Err(ModelError::TimeOverflow(pos));
            }
        }
        Ok(Self {
            trips,
            deadhead,
            goal_s,
            max_chain,
            bus_penalty: DEFAULT_BUS_PENALTY,
            excess_penalty: DEFAULT_EXCESS_PENALTY,
        })
    }

    pub fn with_penalties(mut self, bus: i64, excess: i64) -> Result<Self, ModelError> {
        self.set_penalties(bus, excess)?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.trips.len()
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn trip(&self, i: usize) -> &Trip {
        &self.trips[i]
    }

    pub fn deadhead(&self) -> &DeadheadMatrix {
        &self.deadhead
    }

    /// Deadhead seconds from the end of trip `i` to the start of trip `j`.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> Sec {
        self.deadhead.get(i, j)
    }

    pub fn goal_s(&self) -> Sec {
        self.goal_s
    }

    pub fn max_chain(&self) -> Option<usize> {
        self.max_chain
    }

    /// Annual penalty per dispatched bus (objective term).
    pub fn bus_penalty(&self) -> i64 {
        self.bus_penalty
    }

    /// Annual penalty per minute of over-goal operation (objective term).
    pub fn excess_penalty(&self) -> i64 {
        self.excess_penalty
    }

    pub fn set_goal_s(&mut self, goal_s: Sec) -> Result<(), ModelError> {
        if goal_s <= 0 {
            return Err(ModelError::NonPositiveGoal);
        }
        self.goal_s = goal_s;
        Ok(())
    }

    pub fn set_max_chain(&mut self, max_chain: Option<usize>) -> Result<(), ModelError> {
        if let Some(b) = max_chain {
            if b < 2 {
                return Err(ModelError::MaxChainTooSmall);
            }
        }
        self.max_chain = max_chain;
        Ok(())
    }

    pub fn set_penalties(&mut self, bus: i64, excess: i64) -> Result<(), ModelError> {
        if bus < 0 || excess < 0 {
            return Err(ModelError::NegativePenalty);
        }
        self.bus_penalty = bus;
        self.excess_penalty = excess;
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<(), ModelError> {
        if i >= self.trips.len() {
            return Err(ModelError::TripIndexOutOfRange {
                index: i,
                n: self.trips.len(),
            });
        }
        Ok(())
    }

    /// Whether trip `j` can directly follow trip `i` in one tour: the bus
    /// finishing trip `i` reaches trip `j`'s school no later than `j` starts.
    /// Arriving exactly at the start time counts as compatible.
    pub fn compatible(&self, i: usize, j: usize) -> Result<bool, ModelError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(ModelError::SameTrip(i));
        }
        Ok(self.compatible_raw(i, j))
    }

    #[inline]
    pub(crate) fn compatible_raw(&self, i: usize, j: usize) -> bool {
        let a = &self.trips[i];
        // saturating: an overflowing arrival time can never precede a start
        a.end_s().saturating_add(self.d(i, j)) <= self.trips[j].start_s
    }
}

/// Total operating time of a chain of trips: the sum of all trip durations
/// plus the deadheads between consecutive trips. Waiting between a deadhead
/// arrival and the next departure is not counted.
pub fn tour_duration(trip_ids: &[usize], inst: &Instance) -> Result<Sec, ModelError> {
    let Some((&first, rest)) = trip_ids.split_first() else {
        return Err(ModelError::EmptyTour);
    };
    inst.check_index(first)?;
    let mut total = inst.trip(first).duration_s;
    let mut prev = first;
    for &id in rest {
        inst.check_index(id)?;
        total += inst.d(prev, id) + inst.trip(id).duration_s;
        prev = id;
    }
    Ok(total)
}

/// Seconds the chain operates beyond the goal, clamped at zero.
pub fn excess(trip_ids: &[usize], inst: &Instance) -> Result<Sec, ModelError> {
    Ok((tour_duration(trip_ids, inst)? - inst.goal_s()).max(0))
}

/// An ordered chain of distinct trips served by one bus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour {
    trip_ids: Vec<usize>,
}

impl Tour {
    pub fn new(trip_ids: Vec<usize>) -> Result<Self, ModelError> {
        if trip_ids.is_empty() {
            return Err(ModelError::EmptyTour);
        }
        let mut seen = trip_ids.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::DuplicateTrip(w[0]));
            }
        }
        Ok(Self { trip_ids })
    }

    pub fn trip_ids(&self) -> &[usize] {
        &self.trip_ids
    }

    pub fn len(&self) -> usize {
        self.trip_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trip_ids.is_empty()
    }

    pub fn first(&self) -> usize {
        self.trip_ids[0]
    }

    pub fn last(&self) -> usize {
        *self.trip_ids.last().unwrap()
    }

    pub fn duration(&self, inst: &Instance) -> Result<Sec, ModelError> {
        tour_duration(&self.trip_ids, inst)
    }

    pub fn excess(&self, inst: &Instance) -> Result<Sec, ModelError> {
        excess(&self.trip_ids, inst)
    }
}

/// A partition of all trips into tours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    tours: Vec<Tour>,
}

impl Schedule {
    pub fn new(tours: Vec<Tour>) -> Self {
        Self { tours }
    }

    pub fn tours(&self) -> &[Tour] {
        &self.tours
    }

    pub fn n_tours(&self) -> usize {
        self.tours.len()
    }

    pub fn total_excess_s(&self, inst: &Instance) -> Result<Sec, ModelError> {
        self.tours.iter().map(|t| t.excess(inst)).sum()
    }

    pub fn total_deadhead_s(&self, inst: &Instance) -> Result<Sec, ModelError> {
        let mut total = 0;
        for tour in &self.tours {
            for w in tour.trip_ids().windows(2) {
                inst.check_index(w[0])?;
                inst.check_index(w[1])?;
                total += inst.d(w[0], w[1]);
            }
        }
        Ok(total)
    }
}

/// A single constraint breach found by [`validate_schedule`]. Violations are
/// data, not errors: a validator run never fails, it reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownTrip { tour: usize, id: usize },
    TripUnassigned { id: usize },
    TripReassigned { id: usize },
    IncompatiblePair { tour: usize, first: usize, second: usize },
    TourTooLong { tour: usize, len: usize, max: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownTrip { tour, id } => {
                write!(f, "tour {tour} references unknown trip {id}")
            }
            Violation::TripUnassigned { id } => write!(f, "trip {id} unassigned"),
            Violation::TripReassigned { id } => {
                write!(f, "trip {id} assigned more than once")
            }
            Violation::IncompatiblePair {
                tour,
                first,
                second,
            } => write!(f, "incompatible pair ({first}, {second}) in tour {tour}"),
            Violation::TourTooLong { tour, len, max } => {
                write!(f, "tour {tour} has {len} trips, exceeding the cap of {max}")
            }
        }
    }
}

impl Violation {
    /// Chain-length breaches are advisory when the heuristic path ignores the
    /// cap; everything else marks a broken schedule.
    pub fn is_chain_cap(&self) -> bool {
        matches!(self, Violation::TourTooLong { .. })
    }
}

/// Check that `schedule` partitions the instance's trips into compatible
/// chains, honoring the chain cap when the instance has one. An empty result
/// means the schedule is valid.
pub fn validate_schedule(schedule: &Schedule, inst: &Instance) -> Vec<Violation> {
    let n = inst.n();
    let mut violations = Vec::new();
    let mut assigned = vec![0usize; n];
    for (t, tour) in schedule.tours().iter().enumerate() {
        for &id in tour.trip_ids() {
            if id >= n {
                violations.push(Violation::UnknownTrip { tour: t, id });
            } else {
                assigned[id] += 1;
            }
        }
        for w in tour.trip_ids().windows(2) {
            let (i, j) = (w[0], w[1]);
            if i < n && j < n && i != j && !inst.compatible_raw(i, j) {
                violations.push(Violation::IncompatiblePair {
                    tour: t,
                    first: i,
                    second: j,
                });
            }
        }
        if let Some(max) = inst.max_chain() {
            if tour.len() > max {
                violations.push(Violation::TourTooLong {
                    tour: t,
                    len: tour.len(),
                    max,
                });
            }
        }
    }
    for (id, &count) in assigned.iter().enumerate() {
        if count == 0 {
            violations.push(Violation::TripUnassigned { id });
        } else if count > 1 {
            violations.push(Violation::TripReassigned { id });
        }
    }
    violations
}

/// Violations other than chain-cap advisories.
pub fn hard_violations(schedule: &Schedule, inst: &Instance) -> Vec<Violation> {
    validate_schedule(schedule, inst)
        .into_iter()
        .filter(|v| !v.is_chain_cap())
        .collect()
}

/// Annual cost rates used by KPI reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    /// Currency per bus per year.
    pub annual_bus_cost: i64,
    /// Currency per excess minute per year.
    pub per_minute_year: i64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            annual_bus_cost: DEFAULT_BUS_PENALTY,
            per_minute_year: DEFAULT_EXCESS_PENALTY,
        }
    }
}

impl CostModel {
    pub fn new(annual_bus_cost: i64, per_minute_year: i64) -> Result<Self, ModelError> {
        if annual_bus_cost < 0 || per_minute_year < 0 {
            return Err(ModelError::NegativePenalty);
        }
        Ok(Self {
            annual_bus_cost,
            per_minute_year,
        })
    }

    pub fn annual_cost(&self, n_tours: usize, exceed_minutes: f64) -> f64 {
        self.annual_bus_cost as f64 * n_tours as f64
            + self.per_minute_year as f64 * exceed_minutes
    }
}
