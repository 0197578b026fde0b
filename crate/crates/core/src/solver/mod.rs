//! In-repo numerical engines: a bounded-variable revised simplex, a
//! branch-and-bound MILP driver on top of it, and an exhaustive MILP oracle.

mod bnb;
mod brute;
mod lazy;
mod presolve;
mod problem;
mod scaling;
mod simplex;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_milp, solve_milp_hinted, BnbStats};
pub use brute::{brute_force_milp, MAX_BRUTE_FORCE_BINARIES};
pub use lazy::{solve_lp, solve_pooled, RowPool};
pub use problem::{LazyTag, LinearProgram, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pricing {
    /// Devex reference-framework pricing.
    Devex,
    /// Largest reduced cost.
    Dantzig,
}

/// Every solver tolerance and limit in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on the equilibrated problem.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance on the scaled problem. Column scaling
    /// can shrink a cost by many orders of magnitude, so this sits just above
    /// roundoff.
    pub opt_tol: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
    /// Distance from {0, 1} below which a binary counts as integral.
    pub int_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub gap_tol: f64,
    /// Branch-and-bound node budget.
    pub max_nodes: usize,
    /// Simplex iteration budget; 0 picks a size-dependent default.
    pub max_iterations: usize,
    /// Pivots between basis refactorizations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub pricing: Pricing,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-12,
            pivot_tol: 1e-9,
            int_tol: 1e-6,
            gap_tol: 1e-6,
            max_nodes: 100_000,
            max_iterations: 0,
            refactor_interval: 64,
            bland_after: 50,
            pricing: Pricing::Devex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration budget exhausted or the basis became numerically singular.
    Stalled,
    /// Branch-and-bound node budget exhausted; `x` is the best incumbent.
    NotProven,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::Stalled => "stalled",
            LpStatus::NotProven => "not_proven",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row multipliers `y` (≤-rows first, then equalities) such that the
    /// reduced costs are `c - Aᵀy`. Empty unless the LP was solved to
    /// optimality, and also when presolve fixed variables through forcing
    /// rows (their multipliers are not recovered).
    pub duals: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
            duals: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Lagrangian dual bound `b·y + min_{l≤x≤u} (c - Aᵀy)·x` for the multipliers
/// `y`; `-inf` when the box is unbounded along a nonzero reduced cost or the
/// multipliers have the wrong sign for a ≤-row.
pub fn dual_bound(lp: &LinearProgram, y: &[f64]) -> f64 {
    let n_le = lp.le_rows.len();
    if y.len() != lp.num_rows() || y[..n_le].iter().any(|&v| v > 1e-12) {
        return f64::NEG_INFINITY;
    }
    let mut reduced = lp.objective.clone();
    let rows = lp.le_rows.iter().chain(&lp.eq_rows);
    for (row, &yi) in rows.zip(y) {
        for (j, a) in row.iter() {
            reduced[j] -= a * yi;
        }
    }
    let rhs = lp.le_rhs.iter().chain(&lp.eq_rhs);
    let mut bound: f64 = rhs.zip(y).map(|(b, yi)| b * yi).sum();
    for (j, d) in reduced.into_iter().enumerate() {
        let scale = 1.0 + lp.objective[j].abs();
        if d > 1e-9 * scale {
            bound += d * lp.lower[j];
        } else if d < -1e-9 * scale {
            bound += d * lp.upper[j];
        } else if lp.lower[j].is_finite() && lp.upper[j].is_finite() {
            bound += d * if d > 0.0 { lp.lower[j] } else { lp.upper[j] };
        }
    }
    bound
}
