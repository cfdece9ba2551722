//! Schedule evaluation: duration statistics, over-goal totals, and the
//! annual cost roll-up, plus before/after comparison in the style the
//! balancing step is judged by. Standard deviation is the population SD of
//! the tour durations, since the tour set is the whole population of
//! interest.

use crate::model::{minutes, CostModel, Instance, ModelError, Schedule};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub n_tours: usize,
    /// Minutes.
    pub duration_min: f64,
    pub duration_max: f64,
    pub duration_avg: f64,
    pub duration_sd: f64,
    /// Aggregate minutes over the goal.
    pub exceed_minutes: f64,
    /// Number of tours over the goal.
    pub exceed_count: usize,
    pub total_deadhead: f64,
    pub annual_cost: f64,
}

impl KpiReport {
    /// Copy with every minute/currency figure rounded to two decimals, the
    /// precision used at file and table boundaries.
    pub fn rounded(&self) -> KpiReport {
        KpiReport {
            n_tours: self.n_tours,
            duration_min: round2(self.duration_min),
            duration_max: round2(self.duration_max),
            duration_avg: round2(self.duration_avg),
            duration_sd: round2(self.duration_sd),
            exceed_minutes: round2(self.exceed_minutes),
            exceed_count: self.exceed_count,
            total_deadhead: round2(self.total_deadhead),
            annual_cost: round2(self.annual_cost),
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Evaluate a valid schedule.
pub fn kpi(
    schedule: &Schedule,
    inst: &Instance,
    cost_model: &CostModel,
) -> Result<KpiReport, ModelError> {
    let mut durations = Vec::with_capacity(schedule.n_tours());
    let mut exceed_s = 0i64;
    let mut exceed_count = 0usize;
    for tour in schedule.tours() {
        let d = tour.duration(inst)?;
        durations.push(minutes(d));
        let e = (d - inst.goal_s()).max(0);
        if e > 0 {
            exceed_count += 1;
        }
        exceed_s += e;
    }
    let n = durations.len();
    let (dmin, dmax, avg, sd) = if n == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let dmin = durations.iter().cloned().fold(f64::INFINITY, f64::min);
        let dmax = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let avg = durations.iter().sum::<f64>() / n as f64;
        let var = durations.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / n as f64;
        (dmin, dmax, avg, var.sqrt())
    };
    let exceed_minutes = minutes(exceed_s);
    Ok(KpiReport {
        n_tours: n,
        duration_min: dmin,
        duration_max: dmax,
        duration_avg: avg,
        duration_sd: sd,
        exceed_minutes,
        exceed_count,
        total_deadhead: minutes(schedule.total_deadhead_s(inst)?),
        annual_cost: cost_model.annual_cost(n, exceed_minutes),
    })
}

/// Old/new pairing with percentage deltas on the two balancing KPIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiComparison {
    pub old: KpiReport,
    pub new: KpiReport,
    pub deltas: Deltas,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub sd_pct: f64,
    pub exceed_pct: f64,
}

fn pct_delta(old: f64, new: f64) -> f64 {
    if old == 0.0 {
        0.0
    } else {
        (new - old) / old * 100.0
    }
}

pub fn compare(before: &KpiReport, after: &KpiReport) -> KpiComparison {
    KpiComparison {
        old: before.clone(),
        new: after.clone(),
        deltas: Deltas {
            sd_pct: pct_delta(before.duration_sd, after.duration_sd),
            exceed_pct: pct_delta(before.exceed_minutes, after.exceed_minutes),
        },
    }
}

impl KpiComparison {
    /// JSON rendering with figures rounded to two decimals.
    pub fn to_json(&self) -> String {
        let rounded = KpiComparison {
            old: self.old.rounded(),
            new: self.new.rounded(),
            deltas: Deltas {
                sd_pct: round2(self.deltas.sd_pct),
                exceed_pct: round2(self.deltas.exceed_pct),
            },
        };
        let mut s =
            serde_json::to_string_pretty(&rounded).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// Plain-text aligned table, two-decimal minutes.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{:>12}{:>12}{:>10}", "metric", "old", "new", "delta");
        let row = |out: &mut String, label: &str, old: f64, new: f64, pct: Option<f64>| {
            let delta = match pct {
                Some(p) => format!("{p:+.1}%"),
                None => "-".to_string(),
            };
            let _ = writeln!(out, "{label:<22}{old:>12.2}{new:>12.2}{delta:>10}");
        };
        row(
            &mut out,
            "tours",
            self.old.n_tours as f64,
            self.new.n_tours as f64,
            None,
        );
        row(
            &mut out,
            "duration min (min)",
            self.old.duration_min,
            self.new.duration_min,
            None,
        );
        row(
            &mut out,
            "duration max (min)",
            self.old.duration_max,
            self.new.duration_max,
            None,
        );
        row(
            &mut out,
            "duration avg (min)",
            self.old.duration_avg,
            self.new.duration_avg,
            None,
        );
        row(
            &mut out,
            "duration sd (min)",
            self.old.duration_sd,
            self.new.duration_sd,
            Some(self.deltas.sd_pct),
        );
        row(
            &mut out,
            "exceeding (min)",
            self.old.exceed_minutes,
            self.new.exceed_minutes,
            Some(self.deltas.exceed_pct),
        );
        row(
            &mut out,
            "tours over goal",
            self.old.exceed_count as f64,
            self.new.exceed_count as f64,
            None,
        );
        row(
            &mut out,
            "deadhead (min)",
            self.old.total_deadhead,
            self.new.total_deadhead,
            None,
        );
        row(
            &mut out,
            "annual cost",
            self.old.annual_cost,
            self.new.annual_cost,
            None,
        );
        out
    }
}
