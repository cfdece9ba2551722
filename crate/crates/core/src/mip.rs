//! The exact optimization view of the problem: building the full mixed
//! integer model, exporting it as an LP-format text file for external
//! solvers, and an exhaustive-search oracle that proves optima at desk
//! scale.
//!
//! The model uses `K = ceil(N/2)` tour slots, since only tours with two or
//! more trips need a slot; single-trip tours are carried by the `a`
//! variables. Link variables `x_i_j_k` exist only for time-compatible
//! ordered pairs, which is what makes explicit time-window and subtour rows
//! unnecessary.

#![allow(clippy::needless_range_loop)]

use crate::model::{excess, minutes, Instance, Schedule, Sec, Tour};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MipError {
    #[error("the MIP needs at least 2 trips, got {0}")]
    TooFewTrips(usize),
    #[error("a schedule with {tours} multi-trip tours cannot fit {slots} slots")]
    TooManyTours { tours: usize, slots: usize },
    #[error("schedule is not a valid partition: {0}")]
    InvalidSchedule(String),
}

/// Variable identifiers in canonical order: x, m, n, a, b, p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarId {
    /// 1 if trip i is served right before trip j in tour k.
    X(usize, usize, usize),
    /// 1 if trip i has both a predecessor and a successor in tour k.
    M(usize, usize),
    /// 1 if trip i is served by tour k.
    N(usize, usize),
    /// 1 if trip i rides alone.
    A(usize),
    /// 1 if tour slot k serves at least two trips.
    B(usize),
    /// Time (minutes) tour k runs over the goal.
    P(usize),
}

impl VarId {
    pub fn name(&self) -> String {
        match *self {
            VarId::X(i, j, k) => format!("x_{i}_{j}_{k}"),
            VarId::M(i, k) => format!("m_{i}_{k}"),
            VarId::N(i, k) => format!("n_{i}_{k}"),
            VarId::A(i) => format!("a_{i}"),
            VarId::B(k) => format!("b_{k}"),
            VarId::P(k) => format!("p_{k}"),
        }
    }

    pub fn is_binary(&self) -> bool {
        !matches!(self, VarId::P(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// A linear expression with coefficients merged per variable, kept in
/// canonical variable order.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    terms: BTreeMap<VarId, f64>,
}

impl LinExpr {
    fn add(&mut self, var: VarId, coeff: f64) {
        if coeff != 0.0 {
            *self.terms.entry(var).or_insert(0.0) += coeff;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&VarId, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarCounts {
    pub x: usize,
    pub m: usize,
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub p: usize,
}

impl VarCounts {
    pub fn binaries(&self) -> usize {
        self.x + self.m + self.n + self.a + self.b
    }

    pub fn total(&self) -> usize {
        self.binaries() + self.p
    }
}

/// The assembled model: declared variables plus objective and constraint
/// rows. Time coefficients are minutes; penalties are currency per bus and
/// per over-goal minute.
#[derive(Debug, Clone)]
pub struct MipModel {
    pub n_trips: usize,
    pub k_slots: usize,
    pub variables: Vec<VarId>,
    pub objective: LinExpr,
    pub rows: Vec<Row>,
}

impl MipModel {
    pub fn counts(&self) -> VarCounts {
        let mut c = VarCounts {
            x: 0,
            m: 0,
            n: 0,
            a: 0,
            b: 0,
            p: 0,
        };
        for v in &self.variables {
            match v {
                VarId::X(..) => c.x += 1,
                VarId::M(..) => c.m += 1,
                VarId::N(..) => c.n += 1,
                VarId::A(..) => c.a += 1,
                VarId::B(..) => c.b += 1,
                VarId::P(..) => c.p += 1,
            }
        }
        c
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_nonzeros(&self) -> usize {
        self.objective.len() + self.rows.iter().map(|r| r.expr.len()).sum::<usize>()
    }
}

/// Build the full model for an instance with at least two trips.
pub fn build_mip(inst: &Instance) -> Result<MipModel, MipError> {
    let n = inst.n();
    if n < 2 {
        return Err(MipError::TooFewTrips(n));
    }
    let k_slots = n.div_ceil(2);
    let cap = inst.max_chain().unwrap_or(n); // non-binding default
    let goal_min = minutes(inst.goal_s());
    let m_bus = inst.bus_penalty() as f64;
    let m_g = inst.excess_penalty() as f64;

    let mut out_pairs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_pairs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut compat: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && inst.compatible_raw(i, j) {
                compat.push((i, j));
                out_pairs[i].push(j);
                in_pairs[j].push(i);
            }
        }
    }

    // Declared variables, canonical order.
    let mut variables = Vec::new();
    for &(i, j) in &compat {
        for k in 0..k_slots {
            variables.push(VarId::X(i, j, k));
        }
    }
    variables.sort();
    for i in 0..n {
        for k in 0..k_slots {
            variables.push(VarId::M(i, k));
        }
    }
    for i in 0..n {
        for k in 0..k_slots {
            variables.push(VarId::N(i, k));
        }
    }
    for i in 0..n {
        variables.push(VarId::A(i));
    }
    for k in 0..k_slots {
        variables.push(VarId::B(k));
    }
    for k in 0..k_slots {
        variables.push(VarId::P(k));
    }

    // Objective: bus penalty on (sum x - sum m + sum a), excess penalty on p.
    let mut objective = LinExpr::default();
    for &(i, j) in &compat {
        for k in 0..k_slots {
            objective.add(VarId::X(i, j, k), m_bus);
        }
    }
    for i in 0..n {
        for k in 0..k_slots {
            objective.add(VarId::M(i, k), -m_bus);
        }
    }
    for i in 0..n {
        objective.add(VarId::A(i), m_bus);
    }
    for k in 0..k_slots {
        objective.add(VarId::P(k), m_g);
    }

    let mut rows = Vec::new();

    // Per-slot duration accounting: deadheads plus endpoint-pair durations,
    // minus middle trips counted twice, minus the slack p, within the goal.
    for k in 0..k_slots {
        let mut expr = LinExpr::default();
        for &(i, j) in &compat {
            let coeff = minutes(inst.d(i, j))
                + minutes(inst.trip(i).duration_s)
                + minutes(inst.trip(j).duration_s);
            expr.add(VarId::X(i, j, k), coeff);
        }
        for i in 0..n {
            expr.add(VarId::M(i, k), -minutes(inst.trip(i).duration_s));
        }
        expr.add(VarId::P(k), -1.0);
        rows.push(Row {
            name: format!("c2_{k}"),
            expr,
            sense: Sense::Le,
            rhs: goal_min,
        });
    }

    // Every trip is covered exactly once, alone or inside a slot.
    for i in 0..n {
        let mut expr = LinExpr::default();
        for &j in &out_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(i, j, k), 1.0);
            }
        }
        for &j in &in_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(j, i, k), 1.0);
            }
        }
        expr.add(VarId::A(i), 1.0);
        for k in 0..k_slots {
            expr.add(VarId::M(i, k), -1.0);
        }
        rows.push(Row {
            name: format!("c3_{i}"),
            expr,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }

    // Middle-trip detection (lower side).
    for i in 0..n {
        for k in 0..k_slots {
            let mut expr = LinExpr::default();
            for &j in &out_pairs[i] {
                expr.add(VarId::X(i, j, k), 1.0);
            }
            for &j in &in_pairs[i] {
                expr.add(VarId::X(j, i, k), 1.0);
            }
            expr.add(VarId::M(i, k), -1.0);
            expr.add(VarId::N(i, k), -1.0);
            rows.push(Row {
                name: format!("c4_{i}_{k}"),
                expr,
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
    }

    // Membership detection (upper side).
    for i in 0..n {
        for k in 0..k_slots {
            let mut expr = LinExpr::default();
            for &j in &out_pairs[i] {
                expr.add(VarId::X(i, j, k), 1.0);
            }
            for &j in &in_pairs[i] {
                expr.add(VarId::X(j, i, k), 1.0);
            }
            expr.add(VarId::N(i, k), -2.0);
            rows.push(Row {
                name: format!("c5_{i}_{k}"),
                expr,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }

    // A used slot has exactly one start and one end that are not middles.
    for k in 0..k_slots {
        let mut expr = LinExpr::default();
        for i in 0..n {
            expr.add(VarId::N(i, k), 1.0);
            expr.add(VarId::M(i, k), -1.0);
        }
        expr.add(VarId::B(k), -2.0);
        rows.push(Row {
            name: format!("c6_{k}"),
            expr,
            sense: Sense::Eq,
            rhs: 0.0,
        });
    }

    // Single-trip detection.
    for i in 0..n {
        let mut expr = LinExpr::default();
        for &j in &out_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(i, j, k), 1.0);
            }
        }
        for &j in &in_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(j, i, k), 1.0);
            }
        }
        expr.add(VarId::A(i), 2.0);
        rows.push(Row {
            name: format!("c7_{i}"),
            expr,
            sense: Sense::Le,
            rhs: 2.0,
        });
    }

    // Slot-usage detection, with the chain cap as the big-M.
    for k in 0..k_slots {
        let mut expr = LinExpr::default();
        for &(i, j) in &compat {
            expr.add(VarId::X(i, j, k), 1.0);
        }
        expr.add(VarId::B(k), -((cap - 1) as f64));
        rows.push(Row {
            name: format!("c8_{k}"),
            expr,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }
    for k in 0..k_slots {
        let mut expr = LinExpr::default();
        for &(i, j) in &compat {
            expr.add(VarId::X(i, j, k), 1.0);
        }
        expr.add(VarId::B(k), -1.0);
        rows.push(Row {
            name: format!("c9_{k}"),
            expr,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }

    // Each trip precedes at most once and succeeds at most once.
    for i in 0..n {
        let mut expr = LinExpr::default();
        for &j in &out_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(i, j, k), 1.0);
            }
        }
        rows.push(Row {
            name: format!("c10_{i}"),
            expr,
            sense: Sense::Le,
            rhs: 1.0,
        });
    }
    for i in 0..n {
        let mut expr = LinExpr::default();
        for &j in &in_pairs[i] {
            for k in 0..k_slots {
                expr.add(VarId::X(j, i, k), 1.0);
            }
        }
        rows.push(Row {
            name: format!("c11_{i}"),
            expr,
            sense: Sense::Le,
            rhs: 1.0,
        });
    }

    // Symmetry reduction: used slots come first.
    for k in 1..k_slots {
        let mut expr = LinExpr::default();
        expr.add(VarId::B(k), 1.0);
        expr.add(VarId::B(k - 1), -1.0);
        rows.push(Row {
            name: format!("c12_{k}"),
            expr,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }

    Ok(MipModel {
        n_trips: n,
        k_slots,
        variables,
        objective,
        rows,
    })
}

/// Format a coefficient or bound: integers bare, fractions with at most four
/// decimals, trailing zeros trimmed.
fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

fn write_expr(out: &mut String, expr: &LinExpr) {
    let mut first = true;
    for (var, &coeff) in expr.terms() {
        let mag = coeff.abs();
        if first {
            if coeff < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if coeff < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", fmt_num(mag));
        }
        out.push_str(&var.name());
    }
}

/// Render the model as deterministic LP-format text: objective, constraint
/// rows in family order, bounds, binaries. Byte-identical across runs for
/// identical inputs.
pub fn export_lp(model: &MipModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    write_expr(&mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}: ", row.name);
        write_expr(&mut out, &row.expr);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for var in &model.variables {
        if let VarId::P(_) = var {
            let _ = writeln!(out, " {} >= 0", var.name());
        }
    }
    out.push_str("Binaries\n");
    for var in &model.variables {
        if var.is_binary() {
            let _ = writeln!(out, " {}", var.name());
        }
    }
    out.push_str("End\n");
    out
}

/// An explicit 0/1 assignment of the structural variables for a schedule,
/// used to check the model's bus-count algebra constructively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipAssignment {
    pub x: Vec<(usize, usize, usize)>,
    pub m: Vec<(usize, usize)>,
    pub n: Vec<(usize, usize)>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl MipAssignment {
    /// Value of the bus-count expression `sum x - sum m + sum a`.
    pub fn nbuses(&self) -> i64 {
        self.x.len() as i64 - self.m.len() as i64 + self.a.len() as i64
    }
}

/// Materialize the variable assignment a schedule induces: multi-trip tours
/// occupy slots `0..q` in schedule order (which satisfies the symmetry rows),
/// single-trip tours set their `a` flag.
pub fn materialize_assignment(
    schedule: &Schedule,
    inst: &Instance,
) -> Result<MipAssignment, MipError> {
    let n = inst.n();
    let k_slots = n.div_ceil(2);
    let mut asg = MipAssignment {
        x: Vec::new(),
        m: Vec::new(),
        n: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
    };
    let mut slot = 0;
    for tour in schedule.tours() {
        let ids = tour.trip_ids();
        if ids.len() == 1 {
            asg.a.push(ids[0]);
            continue;
        }
        if slot == k_slots {
            return Err(MipError::TooManyTours {
                tours: slot + 1,
                slots: k_slots,
            });
        }
        for w in ids.windows(2) {
            asg.x.push((w[0], w[1], slot));
        }
        for (pos, &i) in ids.iter().enumerate() {
            asg.n.push((i, slot));
            if pos > 0 && pos + 1 < ids.len() {
                asg.m.push((i, slot));
            }
        }
        asg.b.push(slot);
        slot += 1;
    }
    Ok(asg)
}

/// Exhaustive-oracle outcome: the best partition found, its fleet size and
/// aggregate over-goal minutes, the objective value, and whether the search
/// completed within its node budget.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub schedule: Schedule,
    pub buses: usize,
    pub excess_minutes: f64,
    pub objective: f64,
    pub proven_optimal: bool,
    pub nodes: u64,
}

struct SearchState<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    cap: usize,
    node_limit: u64,
    nodes: u64,
    exhausted: bool,
    // objective scaled by 60 so excess stays in integer seconds
    best_scaled: i64,
    best_chains: Option<Vec<Vec<usize>>>,
}

/// Depth-first enumeration of all partitions of the trips into compatible
/// ordered chains, scored by the penalty objective. Trips are processed in
/// start-time order; a branch is cut as soon as its already-committed buses
/// and excess reach the incumbent. `proven_optimal` is false when the node
/// budget ran out first.
pub fn exact_solve_small(inst: &Instance, node_limit: u64) -> OracleResult {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by_key(|&i| (inst.trip(i).start_s, i));
    let cap = inst.max_chain().unwrap_or(usize::MAX);

    // Seed the incumbent with the always-feasible all-singletons partition,
    // so a node-limited run still returns a complete schedule.
    let singleton_excess: Sec = (0..inst.n())
        .map(|i| (inst.trip(i).duration_s - inst.goal_s()).max(0))
        .sum();
    let mut state = SearchState {
        inst,
        order,
        cap,
        node_limit,
        nodes: 0,
        exhausted: false,
        best_scaled: scaled_objective(inst, inst.n(), singleton_excess),
        best_chains: Some((0..inst.n()).map(|i| vec![i]).collect()),
    };
    let mut chains: Vec<(Vec<usize>, Sec)> = Vec::new();
    dfs(&mut state, 0, &mut chains, 0);

    let chains = state.best_chains.unwrap_or_default();
    let mut tours: Vec<Tour> = chains
        .into_iter()
        .map(|ids| Tour::new(ids).expect("oracle chains are non-empty"))
        .collect();
    tours.sort_by_key(|t| (inst.trip(t.first()).start_s, t.first()));
    let schedule = Schedule::new(tours);

    let buses = schedule.n_tours();
    let excess_s: Sec = schedule
        .tours()
        .iter()
        .map(|t| excess(t.trip_ids(), inst).expect("oracle schedule is valid"))
        .sum();
    let excess_minutes = minutes(excess_s);
    let objective = scaled_objective(inst, buses, excess_s) as f64 / 60.0;
    OracleResult {
        schedule,
        buses,
        excess_minutes,
        objective,
        proven_optimal: !state.exhausted,
        nodes: state.nodes,
    }
}

fn scaled_objective(inst: &Instance, buses: usize, excess_s: Sec) -> i64 {
    60 * inst.bus_penalty() * buses as i64 + inst.excess_penalty() * excess_s
}

fn dfs(state: &mut SearchState, pos: usize, chains: &mut Vec<(Vec<usize>, Sec)>, excess_s: Sec) {
    state.nodes += 1;
    if state.nodes > state.node_limit {
        state.exhausted = true;
        return;
    }
    // Committed buses and excess only grow from here.
    let lower = scaled_objective(state.inst, chains.len(), excess_s);
    if lower >= state.best_scaled {
        return;
    }
    if pos == state.order.len() {
        state.best_scaled = lower;
        state.best_chains = Some(chains.iter().map(|(ids, _)| ids.clone()).collect());
        return;
    }

    let trip = state.order[pos];
    let goal = state.inst.goal_s();

    for c in 0..chains.len() {
        if state.exhausted {
            return;
        }
        let (ref ids, dur) = chains[c];
        if ids.len() >= state.cap {
            continue;
        }
        let last = *ids.last().unwrap();
        if !state.inst.compatible_raw(last, trip) {
            continue;
        }
        let new_dur = dur + state.inst.d(last, trip) + state.inst.trip(trip).duration_s;
        let delta_excess = (new_dur - goal).max(0) - (dur - goal).max(0);
        chains[c].0.push(trip);
        chains[c].1 = new_dur;
        dfs(state, pos + 1, chains, excess_s + delta_excess);
        chains[c].0.pop();
        chains[c].1 = dur;
    }
    if state.exhausted {
        return;
    }

    let dur = state.inst.trip(trip).duration_s;
    chains.push((vec![trip], dur));
    dfs(state, pos + 1, chains, excess_s + (dur - goal).max(0));
    chains.pop();
}

/// Visit every partition of the trips into compatible ordered chains,
/// without pruning. Intended for desk-scale exhaustive checks.
pub fn for_each_partition<F: FnMut(&[Vec<usize>])>(inst: &Instance, mut visit: F) {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by_key(|&i| (inst.trip(i).start_s, i));
    let cap = inst.max_chain().unwrap_or(usize::MAX);
    let mut chains: Vec<Vec<usize>> = Vec::new();

    fn rec<F: FnMut(&[Vec<usize>])>(
        inst: &Instance,
        order: &[usize],
        cap: usize,
        pos: usize,
        chains: &mut Vec<Vec<usize>>,
        visit: &mut F,
    ) {
        if pos == order.len() {
            visit(chains);
            return;
        }
        let trip = order[pos];
        for c in 0..chains.len() {
            let last = *chains[c].last().unwrap();
            if chains[c].len() < cap && inst.compatible_raw(last, trip) {
                chains[c].push(trip);
                rec(inst, order, cap, pos + 1, chains, visit);
                chains[c].pop();
            }
        }
        chains.push(vec![trip]);
        rec(inst, order, cap, pos + 1, chains, visit);
        chains.pop();
    }
    rec(inst, &order, cap, 0, &mut chains, &mut visit);
}
