//! Row generation for lazy ≤-rows: solve with a working subset, add the most
//! violated row of each lazy family, repeat until nothing is violated.

use std::collections::BTreeMap;

use log::trace;

use super::problem::LinearProgram;
use super::simplex::solve_dense;
use super::{LpSolution, SolverOptions};

/// Which ≤-rows are in the working problem. Rows only ever join, so a pool
/// can be shared by every node of a branch-and-bound tree over one LP.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPool {
    active: Vec<bool>,
}

impl RowPool {
    pub fn new(lp: &LinearProgram) -> Self {
        let active = (0..lp.le_rows.len())
            .map(|i| lp.lazy_tag(i).is_none_or(|t| t.seed))
            .collect();
        Self { active }
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

fn working_problem(lp: &LinearProgram, pool: &RowPool) -> (LinearProgram, Vec<usize>) {
    let mut sub = LinearProgram {
        objective: lp.objective.clone(),
        eq_rows: lp.eq_rows.clone(),
        eq_rhs: lp.eq_rhs.clone(),
        eq_names: lp.eq_names.clone(),
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        integral: lp.integral.clone(),
        var_names: lp.var_names.clone(),
        ..Default::default()
    };
    let mut map = Vec::new();
    for i in (0..lp.le_rows.len()).filter(|&i| pool.active[i]) {
        sub.le_rows.push(lp.le_rows[i].clone());
        sub.le_rhs.push(lp.le_rhs[i]);
        sub.le_names.push(lp.le_names[i].clone());
        map.push(i);
    }
    (sub, map)
}

/// Solves `lp` by row generation over its lazy rows, growing `pool`.
pub fn solve_pooled(lp: &LinearProgram, opts: &SolverOptions, pool: &mut RowPool) -> LpSolution {
    let mut iterations = 0;
    loop {
        let (sub, map) = working_problem(lp, pool);
        let mut sol = solve_dense(&sub, opts);
        iterations += sol.iterations;
        sol.iterations = iterations;
        if !sol.is_optimal() {
            return sol;
        }
        let mut worst: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for i in (0..lp.le_rows.len()).filter(|&i| !pool.active[i]) {
            let Some(tag) = lp.lazy_tag(i) else { continue };
            let row = &lp.le_rows[i];
            let b = lp.le_rhs[i];
            let magnitude = row.iter().map(|(j, a)| (a * sol.x[j]).abs()).sum::<f64>();
            let excess = row.dot(&sol.x) - b;
            if excess > 1e-9 * magnitude.max(b.abs()).max(1.0) && worst.get(&tag.group).is_none_or(|&(e, _)| excess > e)
            {
                worst.insert(tag.group, (excess, i));
            }
        }
        if worst.is_empty() {
            let n_le = lp.le_rows.len();
            let mut duals = vec![0.0; n_le + lp.eq_rows.len()];
            if sol.duals.len() == map.len() + lp.eq_rows.len() {
                for (k, &i) in map.iter().enumerate() {
                    duals[i] = sol.duals[k];
                }
                duals[n_le..].copy_from_slice(&sol.duals[map.len()..]);
            }
            sol.duals = duals;
            return sol;
        }
        trace!("row generation: adding {} rows to {} active", worst.len(), map.len());
        for (_, i) in worst.into_values() {
            pool.active[i] = true;
        }
    }
}

/// Solves the continuous relaxation of `lp` (integrality is ignored).
pub fn solve_lp(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    if lp.has_lazy_rows() {
        solve_pooled(lp, opts, &mut RowPool::new(lp))
    } else {
        solve_dense(lp, opts)
    }
}
