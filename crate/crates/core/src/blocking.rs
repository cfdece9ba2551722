//! Stage 1 of the pipeline: chain the trips into the minimum number of
//! tours, and among all minimum-tour schedules, one with the least total
//! deadhead.
//!
//! Every chosen link (i, j) says "the bus serving trip i continues with trip
//! j". A matching makes each trip at most one predecessor and at most one
//! successor, so the links union into simple paths; the tour count is
//! `n - |matching|`, which is the classic minimum path cover identity on the
//! compatibility DAG.

use crate::assignment::{min_cost_max_cardinality, CostMatrix};
use crate::model::{Instance, Schedule, Sec, Tour};

/// Feasible successor links between trips with their deadhead costs.
#[derive(Debug, Clone)]
pub struct LinkGraph {
    n: usize,
    matrix: CostMatrix,
}

impl LinkGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.matrix.is_feasible(i, j)
    }

    /// Deadhead cost of a feasible link.
    pub fn link_cost(&self, i: usize, j: usize) -> Option<Sec> {
        self.is_feasible(i, j).then(|| self.matrix.cost(i, j))
    }

    /// Feasible links in (row, column) order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.matrix.is_feasible(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub(crate) fn matrix(&self) -> &CostMatrix {
        &self.matrix
    }
}

/// Build the successor-link graph: `(i, j)` is feasible iff trip `j` can
/// directly follow trip `i`, with the deadhead as the link cost.
pub fn build_link_graph(inst: &Instance) -> LinkGraph {
    let n = inst.n();
    let mut matrix = CostMatrix::infeasible(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && inst.compatible_raw(i, j) {
                matrix.set(i, j, inst.d(i, j));
            }
        }
    }
    LinkGraph { n, matrix }
}

/// Stage-1 blocking: minimum tour count, then minimum aggregate deadhead.
///
/// The chain-length cap is deliberately ignored here; capping path lengths
/// would break the matching reduction's optimality. Callers that configure a
/// cap can surface the advisory via `validate_schedule`.
pub fn block(inst: &Instance) -> Schedule {
    let n = inst.n();
    let graph = build_link_graph(inst);
    let links = min_cost_max_cardinality(graph.matrix());

    let mut successor = vec![None; n];
    let mut has_predecessor = vec![false; n];
    for (i, j) in links {
        successor[i] = Some(j);
        has_predecessor[j] = true;
    }

    let mut heads: Vec<usize> = (0..n).filter(|&i| !has_predecessor[i]).collect();
    heads.sort_by_key(|&i| (inst.trip(i).start_s, i));

    let tours = heads
        .into_iter()
        .map(|head| {
            let mut chain = vec![head];
            let mut cur = head;
            while let Some(next) = successor[cur] {
                chain.push(next);
                cur = next;
            }
            Tour::new(chain).expect("chains are non-empty and duplicate-free")
        })
        .collect();
    Schedule::new(tours)
}
