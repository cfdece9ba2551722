//! Square assignment solvers: minimum-weight perfect matching over a cost
//! matrix with an infeasible-edge mask (Kuhn–Munkres via shortest augmenting
//! paths on integer reduced costs), plus a min-cost max-cardinality matching
//! built on it by dummy-padding.
//!
//! Infeasible edges are a mask, never a big-number cost, so dual updates stay
//! small and an "optimal" solution can never sneak through a forbidden cell.
//! All arithmetic is `i64`; there is no floating comparison anywhere in the
//! pivoting.

// index loops over parallel arrays are the clearest form for these kernels
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

const UNSET: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    /// No perfect matching exists; `row` is a row whose augmentation ran out
    /// of reachable columns (a Hall-condition failure witness).
    #[error("infeasible matching: row {row} cannot be perfectly matched")]
    Infeasible { row: usize },
    #[error("cost matrix rows must all have length {expected}")]
    Ragged { expected: usize },
}

/// Square cost matrix with a feasibility mask. Costs on infeasible cells are
/// never read.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    n: usize,
    cost: Vec<i64>,
    feasible: Vec<bool>,
}

impl CostMatrix {
    /// All cells feasible.
    pub fn dense(n: usize, cost: Vec<i64>) -> Self {
        assert_eq!(cost.len(), n * n, "cost length must be n*n");
        Self {
            n,
            cost,
            feasible: vec![true; n * n],
        }
    }

    pub fn masked(n: usize, cost: Vec<i64>, feasible: Vec<bool>) -> Self {
        assert_eq!(cost.len(), n * n, "cost length must be n*n");
        assert_eq!(feasible.len(), n * n, "mask length must be n*n");
        Self { n, cost, feasible }
    }

    /// No feasible cells; populate with [`CostMatrix::set`].
    pub fn infeasible(n: usize) -> Self {
        Self {
            n,
            cost: vec![0; n * n],
            feasible: vec![false; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Option<i64>>>) -> Result<Self, AssignmentError> {
        let n = rows.len();
        let mut m = Self::infeasible(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(AssignmentError::Ragged { expected: n });
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(c) = cell {
                    m.set(i, j, *c);
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Mark `(i, j)` feasible with the given cost.
    pub fn set(&mut self, i: usize, j: usize, cost: i64) {
        self.cost[i * self.n + j] = cost;
        self.feasible[i * self.n + j] = true;
    }

    pub fn set_infeasible(&mut self, i: usize, j: usize) {
        self.feasible[i * self.n + j] = false;
    }

    #[inline]
    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.feasible[i * self.n + j]
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> i64 {
        debug_assert!(self.is_feasible(i, j), "cost read on infeasible cell");
        self.cost[i * self.n + j]
    }

    fn row(&self, i: usize) -> (&[i64], &[bool]) {
        let s = i * self.n;
        (&self.cost[s..s + self.n], &self.feasible[s..s + self.n])
    }
}

/// A perfect matching: `assignment[row] = column`, with the summed cost of
/// the assigned cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub assignment: Vec<usize>,
    pub total_cost: i64,
}

/// Minimum-cost perfect matching of a masked square matrix.
///
/// Deterministic: among equal-cost optima the result is the lexicographically
/// smallest assignment (row 0 gets the smallest column it can have in any
/// optimum, then row 1, and so on). Returns an error naming an unmatchable
/// row when no feasible perfect matching exists.
pub fn min_weight_perfect_matching(m: &CostMatrix) -> Result<Matching, AssignmentError> {
    let n = m.n();
    if n == 0 {
        return Ok(Matching {
            assignment: Vec::new(),
            total_cost: 0,
        });
    }

    // Dual potentials. Feasible cells keep cost - u[r] - v[c] >= 0; matched
    // cells are tight.
    let mut u = vec![0i64; n];
    let mut v = vec![0i64; n];

    // Row reduction. A row with no feasible cell is its own Hall witness.
    for r in 0..n {
        let (cost, feas) = m.row(r);
        let mut best: Option<i64> = None;
        for c in 0..n {
            if feas[c] && best.is_none_or(|b| cost[c] < b) {
                best = Some(cost[c]);
            }
        }
        u[r] = best.ok_or(AssignmentError::Infeasible { row: r })?;
    }
    // Column reduction.
    for c in 0..n {
        let mut best: Option<i64> = None;
        for r in 0..n {
            if m.is_feasible(r, c) {
                let red = m.cost(r, c) - u[r];
                if best.is_none_or(|b| red < b) {
                    best = Some(red);
                }
            }
        }
        v[c] = best.unwrap_or(0);
    }

    let mut row_match = vec![UNSET; n];
    let mut col_match = vec![UNSET; n];

    // Greedy seed on tight cells, ascending scan.
    for r in 0..n {
        let (cost, feas) = m.row(r);
        for c in 0..n {
            if col_match[c] == UNSET && feas[c] && cost[c] == u[r] + v[c] {
                row_match[r] = c;
                col_match[c] = r;
                break;
            }
        }
    }

    for root in 0..n {
        if row_match[root] == UNSET {
            augment(m, root, &mut u, &mut v, &mut row_match, &mut col_match)?;
        }
    }

    refine_lexicographic(m, &u, &v, &mut row_match, &mut col_match);

    let total_cost = (0..n).map(|r| m.cost(r, row_match[r])).sum();
    Ok(Matching {
        assignment: row_match,
        total_cost,
    })
}

/// One shortest-augmenting-path phase rooted at an unmatched row.
fn augment(
    m: &CostMatrix,
    root: usize,
    u: &mut [i64],
    v: &mut [i64],
    row_match: &mut [usize],
    col_match: &mut [usize],
) -> Result<(), AssignmentError> {
    let n = m.n();
    let mut min_slack = vec![i64::MAX; n];
    let mut slack_row = vec![root; n];
    let mut committed_row = vec![false; n];
    let mut visited_col = vec![false; n];
    committed_row[root] = true;

    {
        let (cost, feas) = m.row(root);
        for c in 0..n {
            if feas[c] {
                min_slack[c] = cost[c] - u[root] - v[c];
            }
        }
    }

    loop {
        // Smallest-slack unvisited column; ascending scan keeps ties on the
        // lowest index.
        let mut delta = i64::MAX;
        let mut next_col = UNSET;
        for c in 0..n {
            if !visited_col[c] && min_slack[c] < delta {
                delta = min_slack[c];
                next_col = c;
            }
        }
        if next_col == UNSET {
            return Err(AssignmentError::Infeasible { row: root });
        }
        if delta > 0 {
            for r in 0..n {
                if committed_row[r] {
                    u[r] += delta;
                }
            }
            for c in 0..n {
                if visited_col[c] {
                    v[c] -= delta;
                } else if min_slack[c] != i64::MAX {
                    min_slack[c] -= delta;
                }
            }
        }
        visited_col[next_col] = true;

        if col_match[next_col] == UNSET {
            // Augment back to the root along the recorded slack rows.
            let mut c = next_col;
            loop {
                let r = slack_row[c];
                let prev = row_match[r];
                row_match[r] = c;
                col_match[c] = r;
                if r == root {
                    break;
                }
                c = prev;
            }
            return Ok(());
        }

        let r = col_match[next_col];
        committed_row[r] = true;
        let (cost, feas) = m.row(r);
        for c in 0..n {
            if !visited_col[c] && feas[c] {
                let s = cost[c] - u[r] - v[c];
                if s < min_slack[c] {
                    min_slack[c] = s;
                    slack_row[c] = r;
                }
            }
        }
    }
}

/// Rewrite an optimal matching into the lexicographically smallest optimal
/// one. Every optimal assignment lies in the tight subgraph of the final
/// duals, and every perfect matching of that subgraph is optimal, so this is
/// a pure tie-break: fix rows in order, giving each the smallest tight column
/// that still leaves the remainder perfectly matchable.
fn refine_lexicographic(
    m: &CostMatrix,
    u: &[i64],
    v: &[i64],
    row_match: &mut [usize],
    col_match: &mut [usize],
) {
    let n = m.n();
    let mut tight: Vec<Vec<u32>> = Vec::with_capacity(n);
    for r in 0..n {
        let (cost, feas) = m.row(r);
        tight.push(
            (0..n)
                .filter(|&c| feas[c] && cost[c] == u[r] + v[c])
                .map(|c| c as u32)
                .collect(),
        );
    }

    let mut fixed_col = vec![false; n];
    // BFS scratch, generation-stamped so attempts don't re-clear.
    let mut seen_col = vec![0u32; n];
    let mut parent_row = vec![UNSET; n];
    let mut queue: Vec<usize> = Vec::with_capacity(n);
    let mut stamp = 0u32;

    for i in 0..n {
        let current = row_match[i];
        for idx in 0..tight[i].len() {
            let j = tight[i][idx] as usize;
            if fixed_col[j] {
                continue;
            }
            if j == current {
                break;
            }
            // Try to give column j to row i: the row holding j must re-route
            // to the column i would free, using tight edges only.
            let displaced = col_match[j];
            let target = current;
            stamp += 1;
            queue.clear();
            queue.push(displaced);
            let mut found = false;
            let mut qi = 0;
            'search: while qi < queue.len() {
                let r = queue[qi];
                qi += 1;
                for &cc in &tight[r] {
                    let c = cc as usize;
                    if fixed_col[c] || c == j || seen_col[c] == stamp {
                        continue;
                    }
                    seen_col[c] = stamp;
                    parent_row[c] = r;
                    if c == target {
                        found = true;
                        break 'search;
                    }
                    queue.push(col_match[c]);
                }
            }
            if found {
                let mut c = target;
                loop {
                    let r = parent_row[c];
                    let prev = row_match[r];
                    row_match[r] = c;
                    col_match[c] = r;
                    if r == displaced {
                        break;
                    }
                    c = prev;
                }
                row_match[i] = j;
                col_match[j] = i;
                break;
            }
        }
        fixed_col[row_match[i]] = true;
    }
}

/// Maximum-cardinality matching of the feasible cells; among all
/// maximum-cardinality matchings, one of minimum total cost. Returns the
/// matched `(row, column)` pairs in ascending row order.
///
/// Reduction: embed into a 2n-by-2n perfect matching where real-to-real edges
/// cost `c - L` with `L = 1 + n * max_cost`, and every edge touching a dummy
/// costs zero. `L` exceeds any achievable cost difference, so cardinality
/// dominates cost, and the dummies make a perfect matching always exist.
pub fn min_cost_max_cardinality(m: &CostMatrix) -> Vec<(usize, usize)> {
    let n = m.n();
    let mut max_cost: Option<i64> = None;
    for i in 0..n {
        let (cost, feas) = m.row(i);
        for c in 0..n {
            if feas[c] {
                debug_assert!(cost[c] >= 0, "cardinality reduction expects costs >= 0");
                if max_cost.is_none_or(|b| cost[c] > b) {
                    max_cost = Some(cost[c]);
                }
            }
        }
    }
    let Some(max_cost) = max_cost else {
        return Vec::new(); // no feasible edges at all
    };
    let shift = 1 + n as i64 * max_cost;

    let big_n = 2 * n;
    let mut cost = vec![0i64; big_n * big_n];
    let mut feasible = vec![false; big_n * big_n];
    for i in 0..big_n {
        for j in 0..big_n {
            let idx = i * big_n + j;
            if i < n && j < n {
                if m.is_feasible(i, j) {
                    cost[idx] = m.cost(i, j) - shift;
                    feasible[idx] = true;
                }
            } else {
                feasible[idx] = true; // dummy edges, cost 0
            }
        }
    }
    let big = CostMatrix::masked(big_n, cost, feasible);
    let matching = min_weight_perfect_matching(&big)
        .expect("dummy-padded matrix always has a perfect matching");

    (0..n)
        .filter_map(|i| {
            let j = matching.assignment[i];
            (j < n).then_some((i, j))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force minimum over all feasible permutations; `None` when no
    /// perfect matching exists.
    pub(crate) fn brute_force_min(m: &CostMatrix) -> Option<i64> {
        fn rec(m: &CostMatrix, row: usize, used: &mut [bool], acc: i64, best: &mut Option<i64>) {
            let n = m.n();
            if row == n {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for c in 0..n {
                if !used[c] && m.is_feasible(row, c) {
                    used[c] = true;
                    rec(m, row + 1, used, acc + m.cost(row, c), best);
                    used[c] = false;
                }
            }
        }
        let mut best = None;
        rec(m, 0, &mut vec![false; m.n()], 0, &mut best);
        best
    }

    /// Lexicographically smallest among all minimum-cost assignments, by
    /// exhaustive enumeration.
    fn brute_force_lex_min(m: &CostMatrix) -> Option<Vec<usize>> {
        fn rec(
            m: &CostMatrix,
            row: usize,
            used: &mut [bool],
            cur: &mut Vec<usize>,
            acc: i64,
            best: &mut Option<(i64, Vec<usize>)>,
        ) {
            let n = m.n();
            if row == n {
                let better = match best {
                    Some((bc, ba)) => acc < *bc || (acc == *bc && &*cur < ba),
                    None => true,
                };
                if better {
                    *best = Some((acc, cur.clone()));
                }
                return;
            }
            for c in 0..n {
                if !used[c] && m.is_feasible(row, c) {
                    used[c] = true;
                    cur.push(c);
                    rec(m, row + 1, used, cur, acc + m.cost(row, c), best);
                    cur.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = None;
        rec(
            m,
            0,
            &mut vec![false; m.n()],
            &mut Vec::new(),
            0,
            &mut best,
        );
        best.map(|(_, a)| a)
    }

    /// Independent maximum-matching size via plain augmenting paths.
    pub(crate) fn max_matching_size(m: &CostMatrix) -> usize {
        let n = m.n();
        let mut col_of = vec![UNSET; n];
        fn try_row(
            m: &CostMatrix,
            r: usize,
            seen: &mut [bool],
            col_of: &mut [usize],
        ) -> bool {
            for c in 0..m.n() {
                if m.is_feasible(r, c) && !seen[c] {
                    seen[c] = true;
                    if col_of[c] == UNSET || try_row(m, col_of[c], seen, col_of) {
                        col_of[c] = r;
                        return true;
                    }
                }
            }
            false
        }
        let mut size = 0;
        for r in 0..n {
            if try_row(m, r, &mut vec![false; n], &mut col_of) {
                size += 1;
            }
        }
        size
    }

    fn random_masked(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
        let mut cost = vec![0i64; n * n];
        let mut feasible = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                cost[i * n + j] = rng.random_range(0..=100);
                // keep the diagonal feasible so a perfect matching exists
                feasible[i * n + j] = i == j || rng.random_range(0..100) < 60;
            }
        }
        CostMatrix::masked(n, cost, feasible)
    }

    #[test]
    fn all_zero_gives_identity() {
        let m = CostMatrix::dense(3, vec![0; 9]);
        let r = min_weight_perfect_matching(&m).unwrap();
        assert_eq!(r.assignment, vec![0, 1, 2]);
        assert_eq!(r.total_cost, 0);
    }

    #[test]
    fn two_by_two_picks_diagonal() {
        let m = CostMatrix::dense(2, vec![1, 2, 3, 1]);
        let r = min_weight_perfect_matching(&m).unwrap();
        assert_eq!(r.assignment, vec![0, 1]);
        assert_eq!(r.total_cost, 2);
    }

    #[test]
    fn masked_diagonal_forces_swap() {
        let mut m = CostMatrix::infeasible(2);
        m.set(0, 1, 1);
        m.set(1, 0, 1);
        let r = min_weight_perfect_matching(&m).unwrap();
        assert_eq!(r.assignment, vec![1, 0]);
        assert_eq!(r.total_cost, 2);
    }

    #[test]
    fn infeasible_names_a_row() {
        // column 1 unreachable: only column 0 is feasible for both rows
        let mut m = CostMatrix::infeasible(2);
        m.set(0, 0, 1);
        m.set(1, 0, 1);
        let err = min_weight_perfect_matching(&m).unwrap_err();
        assert!(matches!(err, AssignmentError::Infeasible { .. }));
        // a row with no feasible cell is reported directly
        let mut m = CostMatrix::infeasible(2);
        m.set(0, 0, 1);
        m.set(0, 1, 1);
        assert_eq!(
            min_weight_perfect_matching(&m).unwrap_err(),
            AssignmentError::Infeasible { row: 1 }
        );
    }

    #[test]
    fn lexicographic_tie_break_prefers_identity() {
        // both zero-cost perfect matchings exist; identity is lex-smallest
        let m = CostMatrix::dense(3, vec![0, 0, 1, 0, 0, 1, 1, 1, 0]);
        let r = min_weight_perfect_matching(&m).unwrap();
        assert_eq!(r.assignment, vec![0, 1, 2]);
        // here the unique optimum is not the identity
        let m = CostMatrix::dense(2, vec![5, 3, 3, 5]);
        let r = min_weight_perfect_matching(&m).unwrap();
        assert_eq!(r.assignment, vec![1, 0]);
        assert_eq!(r.total_cost, 6);
    }

    #[test]
    fn cardinality_no_edges() {
        let m = CostMatrix::infeasible(3);
        assert!(min_cost_max_cardinality(&m).is_empty());
    }

    #[test]
    fn cardinality_unique_two_link_matching() {
        let mut m = CostMatrix::infeasible(3);
        m.set(0, 1, 1);
        m.set(0, 2, 1);
        m.set(1, 2, 1);
        assert_eq!(min_cost_max_cardinality(&m), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn cardinality_beats_cost() {
        // two disjoint edges cost 5 and 7; a single cheap edge conflicts with
        // both and must lose
        let mut m = CostMatrix::infeasible(2);
        m.set(0, 0, 5);
        m.set(1, 1, 7);
        m.set(0, 1, 1);
        assert_eq!(min_cost_max_cardinality(&m), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn matches_brute_force_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let m = random_masked(&mut rng, n);
            let got = min_weight_perfect_matching(&m).unwrap();
            assert_eq!(Some(got.total_cost), brute_force_min(&m));
            // and the tie-break really is the lexicographic minimum
            assert_eq!(Some(got.assignment), brute_force_lex_min(&m));
        }
    }

    #[test]
    fn cardinality_matches_independent_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let mut m = CostMatrix::infeasible(n);
            for i in 0..n {
                for j in 0..n {
                    if rng.random_range(0..100) < 35 {
                        m.set(i, j, rng.random_range(0..=50));
                    }
                }
            }
            let pairs = min_cost_max_cardinality(&m);
            assert_eq!(pairs.len(), max_matching_size(&m));
            // pairs form a matching over feasible cells
            let mut rows = vec![false; n];
            let mut cols = vec![false; n];
            for &(i, j) in &pairs {
                assert!(m.is_feasible(i, j));
                assert!(!rows[i] && !cols[j]);
                rows[i] = true;
                cols[j] = true;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deterministic_across_calls(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=6);
            let m = random_masked(&mut rng, n);
            let a = min_weight_perfect_matching(&m).unwrap();
            let b = min_weight_perfect_matching(&m).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn identity_feasible_bounds_cost(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=7);
            let m = random_masked(&mut rng, n);
            let diag: i64 = (0..n).map(|i| m.cost(i, i)).sum();
            let r = min_weight_perfect_matching(&m).unwrap();
            prop_assert!(r.total_cost <= diag);
            let recomputed: i64 = (0..n).map(|i| m.cost(i, r.assignment[i])).sum();
            prop_assert_eq!(recomputed, r.total_cost);
        }
    }
}
