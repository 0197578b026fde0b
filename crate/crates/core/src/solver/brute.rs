//! Exhaustive MILP oracle: solve the LP for every 0/1 fixing of the binaries.

use super::lazy::solve_lp;
use super::problem::LinearProgram;
use super::{LpSolution, LpStatus, SolverOptions};
use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_BINARIES: usize = 20;

/// Every fixing is solved on its own with a fresh row pool, so nothing
/// carries over from one fixing to the next or from branch-and-bound.
///
/// Enumerates fixings in lexicographic order of `(v₀, v₁, …)` over
/// `lp.integral` and keeps the first strictly better one, so ties resolve to
/// the lexicographically smallest fixing.
pub fn brute_force_milp(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    let k = lp.integral.len();
    if k > MAX_BRUTE_FORCE_BINARIES {
        return Err(Error::TooManyBinaries(k, MAX_BRUTE_FORCE_BINARIES));
    }
    let mut best: Option<LpSolution> = None;
    let mut iterations = 0;
    let mut unbounded = false;
    let mut fixed = lp.clone();
    for code in 0u64..(1u64 << k) {
        for (pos, &j) in lp.integral.iter().enumerate() {
            let v = ((code >> (k - 1 - pos)) & 1) as f64;
            fixed.lower[j] = v.max(lp.lower[j]);
            fixed.upper[j] = v.min(lp.upper[j]);
        }
        let sol = solve_lp(&fixed, opts);
        iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {
                let better = match &best {
                    None => true,
                    Some(b) => sol.objective < b.objective - 1e-9 * b.objective.abs().max(1.0),
                };
                if better {
                    best = Some(sol);
                }
            }
            LpStatus::Unbounded => unbounded = true,
            _ => {}
        }
    }
    Ok(match best {
        _ if unbounded => LpSolution::without_point(LpStatus::Unbounded, iterations),
        Some(mut b) => {
            b.iterations = iterations;
            b
        }
        None => {
            let mut out = LpSolution::without_point(LpStatus::Infeasible, iterations);
            out.objective = f64::INFINITY;
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_example() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_binary("y", 10.0);
        lp.add_le("link", vec![(x, 1.0), (y, -5.0)], 0.0);
        lp.add_ge("demand", vec![(x, 1.0)], 3.0);
        let sol = brute_force_milp(&lp, &SolverOptions::default()).unwrap();
        assert!((sol.objective - 13.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_for_every_fixing() {
        let mut lp = LinearProgram::default();
        let a = lp.add_binary("a", 1.0);
        let b = lp.add_binary("b", 1.0);
        lp.add_ge("need", vec![(a, 1.0), (b, 1.0)], 3.0);
        let sol = brute_force_milp(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn ties_pick_lexicographically_smallest_fixing() {
        // Exactly one of a, b must be on; both cost the same.
        let mut lp = LinearProgram::default();
        let a = lp.add_binary("a", 1.0);
        let b = lp.add_binary("b", 1.0);
        lp.add_eq("one", vec![(a, 1.0), (b, 1.0)], 1.0);
        let sol = brute_force_milp(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_too_many_binaries() {
        let mut lp = LinearProgram::default();
        for k in 0..21 {
            lp.add_binary(format!("y{k}"), 1.0);
        }
        assert!(matches!(
            brute_force_milp(&lp, &SolverOptions::default()),
            Err(Error::TooManyBinaries(21, 20))
        ));
    }
}
