//! Branch-and-bound over binary variables.
//!
//! Most-fractional branching with lowest-index tie-break. Nodes are explored
//! depth-first until the first incumbent is found, then best-bound first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::debug;
use serde::{Deserialize, Serialize};

use super::lazy::{solve_pooled, RowPool};
use super::problem::LinearProgram;
use super::{LpSolution, LpStatus, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BnbStats {
    pub nodes_explored: usize,
    pub incumbent_updates: usize,
    pub best_bound: f64,
    /// `(incumbent - best_bound) / max(1, |incumbent|)`.
    pub gap: f64,
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    seq: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap on "better": lower bound first, then older node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn with_fixings(lp: &LinearProgram, fixings: &[(usize, f64)]) -> LinearProgram {
    let mut sub = lp.clone();
    for &(j, v) in fixings {
        sub.lower[j] = v;
        sub.upper[j] = v;
    }
    sub
}

fn most_fractional(lp: &LinearProgram, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in &lp.integral {
        let frac = (x[j] - x[j].round()).abs();
        if frac > tol {
            let dist = (x[j] - 0.5).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
    }
    best.map(|(j, _)| j)
}

struct Search<'a> {
    lp: &'a LinearProgram,
    opts: &'a SolverOptions,
    hint: &'a [(usize, f64)],
    incumbent: Option<LpSolution>,
    stats: BnbStats,
    lp_iterations: usize,
    seq: usize,
    pool: RowPool,
    /// Nodes whose LP could not be solved and so were neither bounded nor
    /// pruned; any such node means optimality is unproven.
    unresolved: usize,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => inc.objective - self.opts.gap_tol * inc.objective.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    /// Re-solves with every binary snapped to its rounded value so the
    /// continuous part is consistent with exact 0/1 activations. Returns the
    /// objective of that solve when it is optimal.
    fn try_incumbent(&mut self, x: &[f64]) -> Option<f64> {
        let fixings: Vec<(usize, f64)> = self.lp.integral.iter().map(|&j| (j, x[j].round())).collect();
        let sol = solve_pooled(&with_fixings(self.lp, &fixings), self.opts, &mut self.pool);
        self.lp_iterations += sol.iterations;
        if sol.status == LpStatus::Stalled {
            self.unresolved += 1;
        }
        let objective = sol.is_optimal().then_some(sol.objective);
        if sol.is_optimal() && sol.objective < self.cutoff() {
            debug!("new incumbent {:.9e}", sol.objective);
            self.stats.incumbent_updates += 1;
            self.incumbent = Some(sol);
        }
        objective
    }

    fn hint_value(&self, j: usize) -> Option<f64> {
        self.hint.iter().find(|&&(k, _)| k == j).map(|&(_, v)| v)
    }

    fn children(&mut self, parent: &[(usize, f64)], j: usize, xj: f64, bound: f64) -> [Node; 2] {
        let first = self.hint_value(j).unwrap_or(if xj >= 0.5 { 1.0 } else { 0.0 });
        let mut make = |v: f64| {
            let mut fixings = parent.to_vec();
            fixings.push((j, v));
            self.seq += 1;
            Node {
                bound,
                seq: self.seq,
                fixings,
            }
        };
        let a = make(first);
        let b = make(1.0 - first);
        [a, b]
    }
}

/// Solves `lp` with its `integral` variables restricted to {0, 1}.
pub fn solve_milp(lp: &LinearProgram, opts: &SolverOptions) -> (LpSolution, BnbStats) {
    solve_milp_hinted(lp, opts, &[])
}

/// As [`solve_milp`], trying the binary assignment in `hint` first: it is
/// evaluated as a complete fixing before the search, and children agreeing
/// with it are explored first.
pub fn solve_milp_hinted(lp: &LinearProgram, opts: &SolverOptions, hint: &[(usize, f64)]) -> (LpSolution, BnbStats) {
    let mut search = Search {
        lp,
        opts,
        hint,
        incumbent: None,
        stats: BnbStats::default(),
        lp_iterations: 0,
        seq: 0,
        pool: RowPool::new(lp),
        unresolved: 0,
    };

    let root = solve_pooled(lp, opts, &mut search.pool);
    search.lp_iterations += root.iterations;
    search.stats.nodes_explored = 1;
    match root.status {
        LpStatus::Optimal => {}
        status => {
            let mut out = LpSolution::without_point(status, root.iterations);
            if status == LpStatus::Infeasible {
                out.objective = f64::INFINITY;
            }
            search.stats.best_bound = f64::INFINITY;
            return (out, search.stats);
        }
    }
    let root_bound = root.objective;

    if !lp.integral.is_empty() && lp.integral.iter().all(|j| hint.iter().any(|h| h.0 == *j)) {
        let mut x = root.x.clone();
        for &(j, v) in hint {
            x[j] = v;
        }
        search.try_incumbent(&x);
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut plunge: Option<(Node, LpSolution)> = Some((
        Node {
            bound: root_bound,
            seq: 0,
            fixings: Vec::new(),
        },
        root,
    ));
    let mut budget_hit = false;

    loop {
        let (node, sol) = match plunge.take() {
            Some(pair) => pair,
            None => {
                let Some(node) = heap.pop() else { break };
                if node.bound >= search.cutoff() {
                    continue;
                }
                if search.stats.nodes_explored >= opts.max_nodes {
                    heap.push(node);
                    budget_hit = true;
                    break;
                }
                let sol = solve_pooled(&with_fixings(lp, &node.fixings), opts, &mut search.pool);
                search.lp_iterations += sol.iterations;
                search.stats.nodes_explored += 1;
                (node, sol)
            }
        };
        if sol.status == LpStatus::Stalled {
            // No bound available: branch blindly on the next free binary and
            // let the children inherit the parent's bound.
            match lp.integral.iter().find(|&&j| node.fixings.iter().all(|f| f.0 != j)) {
                Some(&j) => {
                    let [a, b] = search.children(&node.fixings, j, 0.0, node.bound);
                    heap.push(a);
                    heap.push(b);
                }
                None => search.unresolved += 1,
            }
            continue;
        }
        if !sol.is_optimal() || sol.objective >= search.cutoff() {
            continue;
        }
        match most_fractional(lp, &sol.x, opts.int_tol) {
            None => {
                // A binary within the integrality tolerance can still switch on
                // a big-M row; if rounding does not reproduce the relaxation,
                // keep splitting the unfixed binaries.
                let rounded = search.try_incumbent(&sol.x);
                let tol = opts.gap_tol * sol.objective.abs().max(1.0);
                if rounded.is_some_and(|v| v <= sol.objective + tol) {
                    continue;
                }
                let free = lp
                    .integral
                    .iter()
                    .copied()
                    .filter(|&j| node.fixings.iter().all(|f| f.0 != j))
                    .max_by(|&a, &b| {
                        let (fa, fb) = ((sol.x[a] - sol.x[a].round()).abs(), (sol.x[b] - sol.x[b].round()).abs());
                        fa.total_cmp(&fb).then(b.cmp(&a))
                    });
                if let Some(j) = free {
                    let [a, b] = search.children(&node.fixings, j, sol.x[j], sol.objective);
                    heap.push(a);
                    heap.push(b);
                }
            }
            Some(j) => {
                let [first, second] = search.children(&node.fixings, j, sol.x[j], sol.objective);
                if search.incumbent.is_none() {
                    // Depth-first plunge: solve the preferred child right away.
                    heap.push(second);
                    if search.stats.nodes_explored >= opts.max_nodes {
                        heap.push(first);
                        budget_hit = true;
                        break;
                    }
                    let child = solve_pooled(&with_fixings(lp, &first.fixings), opts, &mut search.pool);
                    search.lp_iterations += child.iterations;
                    search.stats.nodes_explored += 1;
                    plunge = Some((first, child));
                } else {
                    heap.push(first);
                    heap.push(second);
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let iterations = search.lp_iterations;
    let mut stats = search.stats;
    if search.unresolved > 0 {
        log::warn!("{} branch-and-bound node(s) could not be solved", search.unresolved);
    }
    let unproven = budget_hit || search.unresolved > 0;
    match search.incumbent {
        Some(mut inc) => {
            stats.best_bound = if budget_hit {
                open_bound.min(inc.objective)
            } else {
                inc.objective
            };
            stats.gap = (inc.objective - stats.best_bound) / inc.objective.abs().max(1.0);
            inc.iterations = iterations;
            if (budget_hit && stats.gap > opts.gap_tol) || search.unresolved > 0 {
                inc.status = LpStatus::NotProven;
            }
            (inc, stats)
        }
        None if unproven => {
            stats.best_bound = open_bound;
            stats.gap = f64::INFINITY;
            (LpSolution::without_point(LpStatus::NotProven, iterations), stats)
        }
        None => {
            stats.best_bound = f64::INFINITY;
            let mut out = LpSolution::without_point(LpStatus::Infeasible, iterations);
            out.objective = f64::INFINITY;
            (out, stats)
        }
    }
}
