//! Instance and schedule files. Both formats are versioned JSON with times
//! in whole seconds; instances are written pretty-printed so diffs stay
//! readable even at a four-digit trip count. A schedule file carries a hash
//! of its instance so a schedule can never silently be replayed against the
//! wrong input.

use crate::model::{
    DeadheadMatrix, Instance, ModelError, Schedule, Tour, Trip, Violation, DEFAULT_BUS_PENALTY,
    DEFAULT_EXCESS_PENALTY,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

pub const INSTANCE_FORMAT_VERSION: u32 = 1;
pub const SCHEDULE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("schedule fails validation: {0}")]
    InvalidSchedule(String),
    #[error("schedule was produced for a different instance (hash {found} != {expected})")]
    HashMismatch { expected: String, found: String },
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    goal_s: i64,
    max_chain: Option<usize>,
    #[serde(default = "default_bus_penalty")]
    bus_penalty: i64,
    #[serde(default = "default_excess_penalty")]
    excess_penalty: i64,
    trips: Vec<TripRecord>,
    deadhead_s: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct TripRecord {
    id: usize,
    start_s: i64,
    duration_s: i64,
}

fn default_bus_penalty() -> i64 {
    DEFAULT_BUS_PENALTY
}

fn default_excess_penalty() -> i64 {
    DEFAULT_EXCESS_PENALTY
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    version: u32,
    instance_hash: String,
    tours: Vec<Vec<usize>>,
}

fn instance_file(inst: &Instance) -> InstanceFile {
    InstanceFile {
        version: INSTANCE_FORMAT_VERSION,
        goal_s: inst.goal_s(),
        max_chain: inst.max_chain(),
        bus_penalty: inst.bus_penalty(),
        excess_penalty: inst.excess_penalty(),
        trips: inst
            .trips()
            .iter()
            .map(|t| TripRecord {
                id: t.id,
                start_s: t.start_s,
                duration_s: t.duration_s,
            })
            .collect(),
        deadhead_s: inst.deadhead().rows(),
    }
}

fn instance_from_file(file: InstanceFile) -> Result<Instance, IoError> {
    if file.version != INSTANCE_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            found: file.version,
            supported: INSTANCE_FORMAT_VERSION,
        });
    }
    let trips: Vec<Trip> = file
        .trips
        .into_iter()
        .map(|t| Trip {
            id: t.id,
            start_s: t.start_s,
            duration_s: t.duration_s,
        })
        .collect();
    let deadhead = DeadheadMatrix::from_rows(file.deadhead_s)?;
    let inst = Instance::new(trips, deadhead, file.goal_s, file.max_chain)?
        .with_penalties(file.bus_penalty, file.excess_penalty)?;
    Ok(inst)
}

/// Instance as a JSON string (pretty, trailing newline).
pub fn instance_to_json(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_file(inst))
        .expect("instance serialization cannot fail");
    s.push('\n');
    s
}

pub fn instance_from_json(json: &str, path: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|e| IoError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    instance_from_file(file)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, instance_to_json(inst)).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text, &path.display().to_string())
}

/// SHA-256 of the canonical (compact) instance serialization, hex encoded.
/// Binds schedule files to the instance they were solved on.
pub fn instance_hash(inst: &Instance) -> String {
    let canonical =
        serde_json::to_vec(&instance_file(inst)).expect("instance serialization cannot fail");
    let digest = Sha256::digest(&canonical);
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Schedule as a JSON string bound to its instance (pretty, trailing
/// newline).
pub fn schedule_to_json(schedule: &Schedule, inst: &Instance) -> String {
    let file = ScheduleFile {
        version: SCHEDULE_FORMAT_VERSION,
        instance_hash: instance_hash(inst),
        tours: schedule
            .tours()
            .iter()
            .map(|t| t.trip_ids().to_vec())
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("schedule serialization cannot fail");
    s.push('\n');
    s
}

pub fn save_schedule(
    schedule: &Schedule,
    inst: &Instance,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, schedule_to_json(schedule, inst)).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn schedule_from_json(json: &str, path: &str, inst: &Instance) -> Result<Schedule, IoError> {
    let file: ScheduleFile = serde_json::from_str(json).map_err(|e| IoError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.version != SCHEDULE_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            found: file.version,
            supported: SCHEDULE_FORMAT_VERSION,
        });
    }
    let expected = instance_hash(inst);
    if file.instance_hash != expected {
        return Err(IoError::HashMismatch {
            expected,
            found: file.instance_hash,
        });
    }
    let tours = file
        .tours
        .into_iter()
        .map(Tour::new)
        .collect::<Result<Vec<_>, _>>()?;
    let schedule = Schedule::new(tours);
    let violations = crate::model::validate_schedule(&schedule, inst);
    if !violations.is_empty() {
        return Err(IoError::InvalidSchedule(render_violations(&violations)));
    }
    Ok(schedule)
}

/// Load a schedule and re-validate it against `inst`; hash mismatch, unknown
/// trips, broken partitions, and incompatible pairs are all hard errors.
pub fn load_schedule(path: impl AsRef<Path>, inst: &Instance) -> Result<Schedule, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    schedule_from_json(&text, &path.display().to_string(), inst)
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
