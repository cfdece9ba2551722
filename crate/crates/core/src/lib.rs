//! Minimum-fleet school-bus tour scheduling with duration balancing.
//!
//! The pipeline has two stages. Blocking chains fixed-start trips into the
//! fewest possible tours (minimum path cover via min-cost max-cardinality
//! matching), breaking ties by total deadhead. Balancing then strips the
//! last trip of every tour and re-attaches the stripped trips through a
//! minimum-weight perfect matching whose weights are the new tours'
//! over-goal minutes; the fleet size is untouched and the aggregate
//! over-goal time never increases.
//!
//! Around the pipeline sit a seeded instance generator, JSON instance and
//! schedule formats, KPI reporting, an LP-format exporter for the exact
//! mixed integer model, and an exhaustive oracle that proves optima on
//! small instances.

pub mod assignment;
pub mod balancing;
pub mod blocking;
pub mod fixtures;
pub mod generator;
pub mod io;
pub mod kpi;
pub mod mip;
pub mod model;

pub use model::{
    CostModel, DeadheadMatrix, Instance, ModelError, Schedule, Sec, Tour, Trip, Violation,
};
