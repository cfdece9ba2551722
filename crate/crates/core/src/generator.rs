//! Seeded synthetic instance generation, calibrated to the duration
//! statistics of the two reference districts. Schools get positions and
//! dismissal times; trips inherit their school's dismissal as a fixed start,
//! draw a truncated-normal duration, and end somewhere on the plane.
//! Deadheads come from plane geometry, so nearby drop-offs really are cheap
//! to chain, loosely like a road network.

use crate::model::{DeadheadMatrix, Instance, Sec, Trip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("n_trips must be at least 1")]
    NoTrips,
    #[error("n_schools must be at least 1")]
    NoSchools,
    #[error("duration bounds must satisfy min <= mean <= max, got {min} <= {mean} <= {max}")]
    TruncationBounds { min: f64, mean: f64, max: f64 },
    #[error("duration standard deviation must be non-negative")]
    NegativeSd,
    #[error("bell window is empty")]
    EmptyBellWindow,
    #[error("plane size and speed must be positive")]
    BadGeometry,
    #[error("goal must be positive")]
    BadGoal,
    #[error("resampling could not hit the duration bounds")]
    ResampleExhausted,
}

/// Everything the generator needs. Durations and the goal are in minutes;
/// bell times are seconds since midnight; geometry is unitless distance with
/// `speed` in distance per minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_trips: usize,
    pub duration_mean: f64,
    pub duration_sd: f64,
    pub duration_min: f64,
    pub duration_max: f64,
    pub n_schools: usize,
    pub bell_earliest_s: Sec,
    pub bell_latest_s: Sec,
    pub plane_size: f64,
    pub speed: f64,
    pub goal: f64,
    pub seed: u64,
}

/// Dismissal times land on a 5-minute grid.
const BELL_GRANULARITY_S: Sec = 300;
const RESAMPLE_LIMIT: u32 = 100_000;

impl GeneratorParams {
    /// Large-district profile: many short trips (mean 25, sd 10, range 7-84
    /// minutes), roughly 13 trips per school.
    pub fn hcpss(n_trips: usize) -> Self {
        Self {
            n_trips,
            duration_mean: 25.0,
            duration_sd: 10.0,
            duration_min: 7.0,
            duration_max: 84.0,
            n_schools: ((n_trips as f64 / 12.7).round() as usize).max(1),
            bell_earliest_s: 13 * 3600 + 30 * 60,
            bell_latest_s: 16 * 3600,
            plane_size: 30.0,
            speed: 1.5,
            goal: 75.0,
            seed: 0,
        }
    }

    /// Small-district profile: longer trips (mean 40, sd 10, range 22-66
    /// minutes), 54 trips by default. Dismissals are spread wider than in the
    /// large profile, the way small districts tier them, so the long trips
    /// still chain.
    pub fn california(n_trips: usize) -> Self {
        Self {
            n_trips,
            duration_mean: 40.0,
            duration_sd: 10.0,
            duration_min: 22.0,
            duration_max: 66.0,
            n_schools: ((n_trips as f64 / 11.0).round() as usize).max(1),
            bell_earliest_s: 12 * 3600,
            bell_latest_s: 16 * 3600 + 15 * 60,
            plane_size: 30.0,
            speed: 1.5,
            goal: 75.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.n_trips == 0 {
            return Err(GeneratorError::NoTrips);
        }
        if self.n_schools == 0 {
            return Err(GeneratorError::NoSchools);
        }
        if !(self.duration_min <= self.duration_mean && self.duration_mean <= self.duration_max)
        {
            return Err(GeneratorError::TruncationBounds {
                min: self.duration_min,
                mean: self.duration_mean,
                max: self.duration_max,
            });
        }
        if self.duration_sd < 0.0 || !self.duration_sd.is_finite() {
            return Err(GeneratorError::NegativeSd);
        }
        if self.duration_min <= 0.0 {
            return Err(GeneratorError::TruncationBounds {
                min: self.duration_min,
                mean: self.duration_mean,
                max: self.duration_max,
            });
        }
        if self.bell_latest_s < self.bell_earliest_s {
            return Err(GeneratorError::EmptyBellWindow);
        }
        if self.plane_size <= 0.0 || self.speed <= 0.0 {
            return Err(GeneratorError::BadGeometry);
        }
        if self.goal <= 0.0 {
            return Err(GeneratorError::BadGoal);
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Point {
    x: f64,
    y: f64,
}

fn distance(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Generate an instance. Deterministic for a given `params`, including the
/// seed: the sampling order is schools (position, bell), then per trip its
/// school, duration, and end point.
pub fn generate(params: &GeneratorParams) -> Result<Instance, GeneratorError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_trips;

    let bell_slots = (params.bell_latest_s - params.bell_earliest_s) / BELL_GRANULARITY_S + 1;
    let mut school_pos = Vec::with_capacity(params.n_schools);
    let mut school_bell = Vec::with_capacity(params.n_schools);
    for _ in 0..params.n_schools {
        let p = Point {
            x: rng.random_range(0.0..params.plane_size),
            y: rng.random_range(0.0..params.plane_size),
        };
        let bell = params.bell_earliest_s + BELL_GRANULARITY_S * rng.random_range(0..bell_slots);
        school_pos.push(p);
        school_bell.push(bell);
    }

    let normal = Normal::new(params.duration_mean, params.duration_sd)
        .expect("validated mean/sd are finite");
    let mut trips = Vec::with_capacity(n);
    let mut trip_school = Vec::with_capacity(n);
    let mut trip_end = Vec::with_capacity(n);
    for id in 0..n {
        let school = rng.random_range(0..params.n_schools);
        let mut duration_min = None;
        for _ in 0..RESAMPLE_LIMIT {
            let draw = normal.sample(&mut rng);
            if draw >= params.duration_min && draw <= params.duration_max {
                duration_min = Some(draw);
                break;
            }
        }
        let duration_min = duration_min.ok_or(GeneratorError::ResampleExhausted)?;
        let end = Point {
            x: rng.random_range(0.0..params.plane_size),
            y: rng.random_range(0.0..params.plane_size),
        };
        trips.push(Trip {
            id,
            start_s: school_bell[school],
            duration_s: (duration_min * 60.0).round() as Sec,
        });
        trip_school.push(school);
        trip_end.push(end);
    }

    let mut entries = Vec::with_capacity(n * n);
    for &end in &trip_end {
        for &school in &trip_school {
            let dist = distance(end, school_pos[school]);
            entries.push((dist / params.speed * 60.0).round() as Sec);
        }
    }
    let deadhead = DeadheadMatrix::new(n, entries).expect("geometric deadheads are non-negative");

    Ok(
        Instance::new(trips, deadhead, (params.goal * 60.0).round() as Sec, None)
            .expect("generated trips satisfy the model invariants"),
    )
}
