//! Bounded-variable revised primal simplex with an explicit dense basis inverse.
//!
//! Every row gets a logical variable (`A x + s = b`): ≤-rows have `s ∈ [0, ∞)`,
//! equalities `s ∈ [0, 0]`. The slack basis is the starting point; phase 1
//! minimizes the sum of bound infeasibilities of the basic variables and phase
//! 2 the true objective. Pricing is Devex by default, switching to Bland's rule
//! after a streak of degenerate pivots.

use log::trace;

use super::presolve::{presolve, Presolved};
use super::problem::LinearProgram;
use super::scaling::ScaledLp;
use super::{LpSolution, LpStatus, Pricing, SolverOptions};

/// Basic-variable bound violations below this are treated as roundoff.
const PRIMAL_TOL: f64 = 1e-9;
/// Step lengths below this count as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable resting at zero.
    Zero,
}

struct Simplex<'a> {
    lp: &'a ScaledLp,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    binv: Vec<f64>,
    weights: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Stalled,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a ScaledLp, opts: &'a SolverOptions) -> Self {
        let m = lp.num_rows;
        let n = lp.cols.len();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for i in 0..m {
            lower.push(0.0);
            upper.push(if i < lp.num_le { f64::INFINITY } else { 0.0 });
        }
        let mut x = vec![0.0; n + m];
        let mut state = vec![State::Basic; n + m];
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            (x[j], state[j]) = if l.is_finite() {
                (l, State::Lower)
            } else if u.is_finite() {
                (u, State::Upper)
            } else {
                (0.0, State::Zero)
            };
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut s = Self {
            lp,
            opts,
            m,
            n,
            lower,
            upper,
            x,
            state,
            head: (n..n + m).collect(),
            binv,
            weights: vec![1.0; n + m],
            pivots_since_refactor: 0,
            iterations: 0,
        };
        s.compute_basic_values();
        s
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            ColumnIter::Structural(self.lp.cols[j].iter())
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    fn phase2_cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (k, a) in self.column(j) {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.binv[i * m + k] * a;
            }
        }
        out
    }

    /// `cᵀ B⁻¹` for a basic cost vector.
    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        self.column(j).map(|(i, a)| y[i] * a).sum()
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut r = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (i, a) in self.column(j) {
                    r[i] -= a * xj;
                }
            }
        }
        let mut xb = vec![0.0; m];
        for (i, v) in xb.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *v = row.iter().zip(&r).map(|(b, r)| b * r).sum();
        }
        for (i, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[i];
        }
        // One step of iterative refinement against the original columns.
        let mut res = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            let xj = self.x[j];
            if xj != 0.0 {
                for (i, a) in self.column(j) {
                    res[i] -= a * xj;
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let d: f64 = row.iter().zip(&res).map(|(b, r)| b * r).sum();
            self.x[self.head[i]] += d;
        }
    }

    /// Rebuilds `B⁻¹`. A numerically singular basis is repaired by swapping
    /// logical columns in for the dependent ones; the displaced variables go
    /// to a bound and phase 1 restores feasibility if needed.
    fn refactor(&mut self) -> bool {
        for _ in 0..=self.m {
            match self.try_factor() {
                Ok(()) => return true,
                Err(pos) => {
                    if !self.repair(pos) {
                        return false;
                    }
                }
            }
        }
        false
    }

    /// Replaces the basic variable at basis position `pos` with the logical of
    /// some row that no basic column pivots on.
    fn repair(&mut self, pos: usize) -> bool {
        let covered = self.pivot_rows();
        let Some(row) = (0..self.m).find(|&i| !covered[i] && self.state[self.n + i] != State::Basic) else {
            return false;
        };
        let out = self.head[pos];
        let (l, u) = (self.lower[out], self.upper[out]);
        (self.x[out], self.state[out]) = if l.is_finite() && (!u.is_finite() || self.x[out] - l <= u - self.x[out]) {
            (l, State::Lower)
        } else if u.is_finite() {
            (u, State::Upper)
        } else {
            (0.0, State::Zero)
        };
        let q = self.n + row;
        self.head[pos] = q;
        self.state[q] = State::Basic;
        log::debug!("basis repair: column {out} replaced by the logical of row {row}");
        true
    }

    /// Rows used as pivots by a partial factorization of the basis columns
    /// that factor cleanly.
    fn pivot_rows(&self) -> Vec<bool> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.head.iter().enumerate() {
            for (i, v) in self.column(j) {
                a[i * m + c] = v;
            }
        }
        let mut used = vec![false; m];
        for col in 0..m {
            let (mut piv, mut best) = (usize::MAX, 1e-11);
            for r in (0..m).filter(|&r| !used[r]) {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if piv == usize::MAX {
                continue;
            }
            used[piv] = true;
            let d = a[piv * m + col];
            for r in (0..m).filter(|&r| !used[r]) {
                let f = a[r * m + col] / d;
                if f != 0.0 {
                    for k in col..m {
                        a[r * m + k] -= f * a[piv * m + k];
                    }
                }
            }
        }
        used
    }

    /// Gauss-Jordan elimination with partial pivoting; on failure returns the
    /// basis position whose column is dependent on the earlier ones.
    fn try_factor(&mut self) -> Result<(), usize> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.head.iter().enumerate() {
            for (i, v) in self.column(j) {
                a[i * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (mut piv, mut best) = (col, 0.0);
            for r in col..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-11 {
                return Err(col);
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        // Gauss-Jordan on B gives B⁻¹ with rows indexed by basis position.
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.compute_basic_values();
        Ok(())
    }

    /// Widens the bounds of out-of-bound basics to their current values.
    fn absorb_infeasibility(&mut self) {
        for &j in &self.head {
            if self.x[j] < self.lower[j] {
                self.lower[j] = self.x[j];
            } else if self.x[j] > self.upper[j] {
                self.upper[j] = self.x[j];
            }
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        let tol = PRIMAL_TOL * (1.0 + v.abs());
        if v < self.lower[j] - tol {
            self.lower[j] - v
        } else if v > self.upper[j] + tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        {
            let row = &mut self.binv[r * m..(r + 1) * m];
            row.iter_mut().for_each(|v| *v /= piv);
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= a * p;
                }
            }
        }
        self.head[r] = q;
        self.state[q] = State::Basic;
        self.pivots_since_refactor += 1;
    }

    fn max_iterations(&self) -> usize {
        if self.opts.max_iterations > 0 {
            self.opts.max_iterations
        } else {
            20_000 + 50 * (self.n + self.m)
        }
    }

    fn run(&mut self) -> Outcome {
        let total = self.n + self.m;
        let mut degenerate_streak = 0usize;
        let mut phase_flips = 0usize;
        let mut was_phase1 = true;
        loop {
            if self.iterations >= self.max_iterations() {
                return Outcome::Stalled;
            }
            if self.pivots_since_refactor >= self.opts.refactor_interval && !self.refactor() {
                return Outcome::Stalled;
            }

            // Phase costs over the basis.
            let mut cb = vec![0.0; self.m];
            let mut phase1 = false;
            for (i, &j) in self.head.iter().enumerate() {
                if self.infeasibility(j) > 0.0 {
                    phase1 = true;
                    cb[i] = if self.x[j] < self.lower[j] { -1.0 } else { 1.0 };
                }
            }
            if !phase1 {
                for (i, &j) in self.head.iter().enumerate() {
                    cb[i] = self.phase2_cost(j);
                }
            }
            if phase1 && !was_phase1 {
                // Roundoff pushed a basic just past its bound during phase 2.
                // Re-entering phase 1 for that can loop against phase 2, so a
                // violation below the feasibility tolerance shifts the bound.
                let worst = self
                    .head
                    .iter()
                    .map(|&j| self.infeasibility(j) / (1.0 + self.x[j].abs()))
                    .fold(0.0, f64::max);
                if worst <= self.opts.feas_tol {
                    self.absorb_infeasibility();
                    continue;
                }
                phase_flips += 1;
            }
            if phase1 != was_phase1 {
                self.weights.iter_mut().for_each(|w| *w = 1.0);
                was_phase1 = phase1;
            }
            let y = self.btran(&cb);

            let bland = degenerate_streak > self.opts.bland_after || phase_flips > self.opts.bland_after;
            let mut entering: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let c = if phase1 { 0.0 } else { self.phase2_cost(j) };
                let d = c - self.dot_column(&y, j);
                let eligible = match st {
                    State::Lower => d < -self.opts.opt_tol,
                    State::Upper => d > self.opts.opt_tol,
                    State::Zero => d.abs() > self.opts.opt_tol,
                    State::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                let score = match self.opts.pricing {
                    Pricing::Devex => d * d / self.weights[j],
                    Pricing::Dantzig => d.abs(),
                };
                if score > best_score {
                    best_score = score;
                    entering = Some((j, d));
                }
            }

            let Some((q, dq)) = entering else {
                if phase1 {
                    // Residual infeasibility within the tolerance is absorbed by
                    // shifting the offending bounds; anything larger is final.
                    let worst = self
                        .head
                        .iter()
                        .map(|&j| self.infeasibility(j) / (1.0 + self.x[j].abs()))
                        .fold(0.0, f64::max);
                    if worst > self.opts.feas_tol {
                        // Only trust the verdict on a fresh factorization.
                        if self.pivots_since_refactor > 0 {
                            if !self.refactor() {
                                return Outcome::Stalled;
                            }
                            continue;
                        }
                        return Outcome::Infeasible;
                    }
                    self.absorb_infeasibility();
                    continue;
                }
                return Outcome::Optimal;
            };

            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Harris ratio test. Pass one finds the longest step allowed with
            // every bound relaxed by the primal tolerance; pass two picks the
            // largest pivot among the rows that block within that step.
            // Infeasible basics in phase 1 only block at the bound they violate.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leaving: Option<(usize, f64)> = None;
            let mut ratios: Vec<(usize, f64, f64)> = Vec::new();
            let mut relaxed = f64::INFINITY;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let j = self.head[i];
                let rate = -dir * a;
                let (lo, hi) = if self.infeasibility(j) > 0.0 {
                    if self.x[j] < self.lower[j] {
                        (f64::NEG_INFINITY, self.lower[j])
                    } else {
                        (self.upper[j], f64::INFINITY)
                    }
                } else {
                    (self.lower[j], self.upper[j])
                };
                let (t, bound) = if rate > 0.0 && hi.is_finite() {
                    ((hi - self.x[j]) / rate, hi)
                } else if rate < 0.0 && lo.is_finite() {
                    ((lo - self.x[j]) / rate, lo)
                } else {
                    continue;
                };
                let slack = 0.5 * PRIMAL_TOL * (1.0 + bound.abs());
                relaxed = relaxed.min(t.max(0.0) + slack / rate.abs());
                ratios.push((i, t.max(0.0), bound));
            }
            if relaxed < theta {
                let mut pick: Option<(usize, f64, f64)> = None;
                for &(i, t, bound) in &ratios {
                    if t > relaxed {
                        continue;
                    }
                    pick = match pick {
                        None => Some((i, t, bound)),
                        Some(p) => {
                            let better = if bland {
                                self.head[i] < self.head[p.0]
                            } else {
                                alpha[i].abs() > alpha[p.0].abs()
                            };
                            if better {
                                Some((i, t, bound))
                            } else {
                                Some(p)
                            }
                        }
                    };
                }
                let (r, t, bound) = pick.expect("ratio list is nonempty");
                theta = t;
                leaving = Some((r, bound));
            }
            if !theta.is_finite() {
                return if phase1 { Outcome::Stalled } else { Outcome::Unbounded };
            }

            self.iterations += 1;
            if theta <= DEGENERATE_STEP {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            if theta > 0.0 {
                self.x[q] += dir * theta;
                for (i, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        self.x[self.head[i]] -= dir * a * theta;
                    }
                }
            }

            match leaving {
                None => {
                    // Bound flip of the entering variable.
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = State::Upper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = State::Lower;
                    }
                }
                Some((r, bound)) => {
                    let out = self.head[r];
                    if self.opts.pricing == Pricing::Devex {
                        self.update_weights(r, q, &alpha);
                    }
                    self.x[out] = bound;
                    self.state[out] = if bound == self.upper[out] && bound != self.lower[out] {
                        State::Upper
                    } else {
                        State::Lower
                    };
                    self.pivot(r, q, &alpha);
                }
            }
            if self.iterations.is_multiple_of(500) {
                trace!(
                    "simplex iteration {} (phase {})",
                    self.iterations,
                    if phase1 { 1 } else { 2 }
                );
            }
        }
    }

    fn update_weights(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        let arq = alpha[r];
        let wq = self.weights[q];
        for j in 0..self.n + self.m {
            if self.state[j] == State::Basic || j == q {
                continue;
            }
            let arj = self.dot_column(&rho, j);
            if arj != 0.0 {
                let cand = (arj / arq).powi(2) * wq;
                if cand > self.weights[j] {
                    self.weights[j] = cand;
                }
            }
        }
        let out = self.head[r];
        self.weights[out] = (wq / (arq * arq)).max(1.0);
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.phase2_cost(j)).collect();
        self.btran(&cb)
    }
}

enum ColumnIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Logical(row) => row.take().map(|i| (i, 1.0)),
        }
    }
}

/// Solves the continuous relaxation of `lp` with every row present
/// (integrality is ignored). Fixed columns and forcing rows are presolved
/// away first; a stalled solve is retried once with Dantzig pricing and more
/// frequent refactorization.
pub(super) fn solve_dense(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    if lp.check().is_err() || lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return solve_once(lp, opts);
    }
    let reduced = match presolve(lp) {
        Presolved::Infeasible => return LpSolution::without_point(LpStatus::Infeasible, 0),
        Presolved::Reduced(r) => r,
    };
    let sol = if reduced.lp.num_vars() == 0 {
        LpSolution {
            status: LpStatus::Optimal,
            x: Vec::new(),
            objective: 0.0,
            iterations: 0,
            duals: vec![0.0; reduced.lp.num_rows()],
        }
    } else {
        solve_with_retry(&reduced.lp, opts)
    };
    if !sol.is_optimal() {
        return sol;
    }
    let x = reduced.expand_x(&sol.x);
    LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        duals: reduced.expand_duals(&sol.duals, lp.le_rows.len(), lp.eq_rows.len()),
        x,
        iterations: sol.iterations,
    }
}

fn solve_with_retry(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    let first = solve_once(lp, opts);
    if first.status != LpStatus::Stalled {
        return first;
    }
    let careful = SolverOptions {
        pricing: Pricing::Dantzig,
        refactor_interval: opts.refactor_interval.clamp(1, 16),
        bland_after: opts.bland_after.min(10),
        ..opts.clone()
    };
    log::debug!("simplex stalled after {} iterations, retrying", first.iterations);
    let mut second = solve_once(lp, &careful);
    second.iterations += first.iterations;
    second
}

fn solve_once(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    if let Err(e) = lp.check() {
        log::warn!("rejecting malformed LP: {e}");
        return LpSolution::without_point(LpStatus::Stalled, 0);
    }
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return LpSolution::without_point(LpStatus::Infeasible, 0);
    }
    let scaled = ScaledLp::new(lp, true);
    let mut sx = Simplex::new(&scaled, opts);
    let mut outcome = sx.run();
    if matches!(outcome, Outcome::Optimal) {
        // Re-verify against a fresh factorization; roundoff accumulated in the
        // product updates can leave a basic variable slightly out of bounds.
        for _ in 0..3 {
            if !sx.refactor() {
                outcome = Outcome::Stalled;
                break;
            }
            let worst = sx
                .head
                .iter()
                .map(|&j| sx.infeasibility(j) / (1.0 + sx.x[j].abs()))
                .fold(0.0, f64::max);
            if worst <= opts.feas_tol {
                break;
            }
            outcome = sx.run();
            if !matches!(outcome, Outcome::Optimal) {
                break;
            }
        }
    }
    let iterations = sx.iterations;
    match outcome {
        Outcome::Optimal => {
            let mut x = scaled.unscale_x(&sx.x[..sx.n]);
            for (j, v) in x.iter_mut().enumerate() {
                *v = v.clamp(lp.lower[j], lp.upper[j]);
            }
            let duals = scaled.unscale_duals(&sx.duals());
            LpSolution {
                status: LpStatus::Optimal,
                objective: lp.objective_value(&x),
                x,
                iterations,
                duals,
            }
        }
        Outcome::Infeasible => LpSolution::without_point(LpStatus::Infeasible, iterations),
        Outcome::Unbounded => LpSolution::without_point(LpStatus::Unbounded, iterations),
        Outcome::Stalled => LpSolution::without_point(LpStatus::Stalled, iterations),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::dual_bound;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn lower_bound_row() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        lp.add_ge("c", vec![(x, 1.0)], 3.0);
        let sol = solve_dense(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::default();
        lp.add_var("x", 0.0, f64::INFINITY, -1.0);
        assert_eq!(solve_dense(&lp, &opts()).status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 0.5, 1.0);
        let y = lp.add_var("y", 0.0, 0.5, 1.0);
        lp.add_ge("c", vec![(x, 1.0), (y, 1.0)], 2.0);
        assert_eq!(solve_dense(&lp, &opts()).status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x - y  s.t.  x + y = 4, x - y >= -2, y free, x in [0, 10]
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        lp.add_eq("sum", vec![(x, 1.0), (y, 1.0)], 4.0);
        lp.add_ge("diff", vec![(x, 1.0), (y, -1.0)], -2.0);
        let sol = solve_dense(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 3.0).abs() < 1e-9);
        assert!((sol.objective + 2.0).abs() < 1e-9);
        let bound = dual_bound(&lp, &sol.duals);
        assert!((bound - sol.objective).abs() < 1e-7, "{bound}");
    }

    #[test]
    fn badly_scaled_rows() {
        // min x s.t. 1e10 * x - y >= 2e7, y <= 1e7, x in [0, 1]
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        let y = lp.add_var("y", 0.0, 1e7, 0.0);
        lp.add_ge("c", vec![(x, 1e10), (y, -1.0)], 2e7);
        let sol = solve_dense(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example.
        let mut lp = LinearProgram::default();
        let v: Vec<usize> = (0..4)
            .map(|k| lp.add_var(format!("x{k}"), 0.0, f64::INFINITY, [-0.75, 150.0, -0.02, 6.0][k]))
            .collect();
        lp.add_le("r1", vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], 0.0);
        lp.add_le("r2", vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], 0.0);
        lp.add_le("r3", vec![(v[2], 1.0)], 1.0);
        let sol = solve_dense(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9, "{}", sol.objective);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            /// Random bounded LPs: the solution is feasible and the dual
            /// certificate closes the gap.
            #[test]
            fn weak_duality_and_feasibility(
                n in 2usize..7,
                m in 1usize..6,
                seed in proptest::collection::vec(-1.0f64..1.0, 100),
            ) {
                let mut k = 0;
                let mut next = || { k += 1; seed[k % seed.len()] };
                let mut lp = LinearProgram::default();
                for j in 0..n {
                    let c = next();
                    lp.add_var(format!("x{j}"), 0.0, 1.0 + next().abs() * 4.0, c);
                }
                for i in 0..m {
                    let terms: Vec<(usize, f64)> = (0..n).map(|j| (j, next() * 10f64.powi((i % 3) as i32))).collect();
                    let rhs = next().abs() * 5.0;
                    lp.add_le(format!("r{i}"), terms, rhs);
                }
                let sol = solve_dense(&lp, &SolverOptions::default());
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!(lp.max_violation(&sol.x) < 1e-7);
                let bound = dual_bound(&lp, &sol.duals);
                let scale = 1.0 + sol.objective.abs();
                prop_assert!(sol.objective >= bound - 1e-6 * scale);
                prop_assert!(bound >= sol.objective - 1e-6 * scale);
            }
        }
    }
}
