//! Power re-tuning on a fixed topology by successive inner approximation:
//! each step minimizes total power over a conservative linearization that is
//! exact at the current powers, so every iterate stays feasible and the total
//! power never increases.

use std::collections::BTreeSet;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::approx;
use crate::error::{Error, Result};
use crate::formulation::{build_retune_lp, route_flows, FormulationOptions, VarIndex};
use crate::model::{validate_scenario, IterationRecord, IterationTrace, LinkId, Plan, PowerVector, Scenario};
use crate::solver::{solve_lp, LinearProgram, LpSolution, LpStatus, SolverOptions, SparseRow};
use crate::validate::check_feasibility_with;

const REPLAN: &str = "the fixed links and subchannels cannot carry the demand; re-plan required";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetuneOptions {
    pub segments: usize,
    pub max_outer_iters: usize,
    /// Stop once `max |ΔX| < rel_power_tol · P̃`.
    pub rel_power_tol: f64,
    /// Probe step of the stationarity check, as a fraction of `P̃`.
    pub stationarity_tol: f64,
    pub feasibility_tol: f64,
    pub solver: SolverOptions,
    pub formulation: FormulationOptions,
}

impl Default for RetuneOptions {
    fn default() -> Self {
        Self {
            segments: 32,
            max_outer_iters: 50,
            rel_power_tol: 1e-5,
            stationarity_tol: 1e-4,
            feasibility_tol: 1e-9,
            solver: SolverOptions::default(),
            formulation: FormulationOptions::default(),
        }
    }
}

impl RetuneOptions {
    pub fn check(&self) -> Result<()> {
        if self.segments == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter(
                "segments and max_outer_iters must be >= 1".into(),
            ));
        }
        if !(self.rel_power_tol > 0.0) || !(self.stationarity_tol > 0.0) || !(self.feasibility_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Clips `p` to the enabled pairs and to the per-link and per-node power
/// limits of `s`, scaling rows down proportionally where a sum is exceeded.
pub fn project_onto_bounds(
    s: &Scenario,
    p: &PowerVector,
    links: &BTreeSet<LinkId>,
    subchannels: &BTreeSet<usize>,
) -> PowerVector {
    let nf = s.num_subchannels();
    let mut out = PowerVector::zeros(s.num_links(), nf);
    for &l in links {
        for &f in subchannels {
            out.set(l, f, p.get(l, f).max(0.0));
        }
        let total = out.link_total(l);
        if total > s.links[l].p_max {
            let k = s.links[l].p_max / total;
            (0..nf).for_each(|f| out.set(l, f, out.get(l, f) * k));
        }
    }
    for node in &s.nodes {
        let used: f64 = s.outgoing(node.id).map(|l| out.link_total(l)).sum();
        if used > node.power_budget {
            let k = node.power_budget / used;
            for l in s.outgoing(node.id).collect::<Vec<_>>() {
                (0..nf).for_each(|f| out.set(l, f, out.get(l, f) * k));
            }
        }
    }
    out
}

fn powers_from(vi: &VarIndex, x: &[f64], links: &BTreeSet<LinkId>, subchannels: &BTreeSet<usize>) -> PowerVector {
    let mut p = PowerVector::zeros(vi.num_links, vi.num_subchannels);
    for &l in links {
        for &f in subchannels {
            p.set(l, f, x[vi.x(l, f)].max(0.0));
        }
    }
    p
}

/// Adds a nonnegative slack to every link capacity row and minimizes their
/// sum instead of the power.
fn elastic(mut lp: LinearProgram) -> (LinearProgram, Vec<usize>) {
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    let rows: Vec<usize> = (0..lp.le_rows.len())
        .filter(|&i| lp.le_names[i].starts_with("C7_"))
        .collect();
    let mut slacks = Vec::new();
    for i in rows {
        let e = lp.add_var(format!("e_{}", lp.le_names[i]), 0.0, f64::INFINITY, 1.0);
        let mut terms: Vec<(usize, f64)> = lp.le_rows[i].iter().collect();
        terms.push((e, -1.0));
        lp.le_rows[i] = SparseRow::from_terms(terms);
        slacks.push(e);
    }
    (lp, slacks)
}

/// Finds powers on the fixed topology whose linearization admits the demand,
/// starting from silence and moving the expansion point to each elastic
/// solution until no capacity shortfall remains.
fn restore(
    s: &Scenario,
    links: &BTreeSet<LinkId>,
    subchannels: &BTreeSet<usize>,
    opts: &RetuneOptions,
) -> Result<PowerVector> {
    let mut p = PowerVector::zeros(s.num_links(), s.num_subchannels());
    let target = 1e-9 * (s.total_rate_ul() + s.total_rate_dl()).max(1.0);
    let mut previous = f64::INFINITY;
    for m in 1..=opts.max_outer_iters {
        let a = approx::build(s, &p, opts.segments)?;
        let (lp, vi) = build_retune_lp(s, links, subchannels, &a, &opts.formulation)?;
        let (lp, _) = elastic(lp);
        let sol = solve_lp(&lp, &opts.solver);
        if sol.status != LpStatus::Optimal {
            return Err(Error::Infeasible(format!("{REPLAN} (restoration LP: {})", sol.status)));
        }
        let shortfall = sol.objective.max(0.0);
        info!("restoration step {m}: capacity shortfall {shortfall:.6e} bit/s");
        p = powers_from(&vi, &sol.x, links, subchannels);
        if shortfall <= target {
            return Ok(p);
        }
        if shortfall >= previous * (1.0 - 1e-6) {
            break;
        }
        previous = shortfall;
    }
    Err(Error::Infeasible(format!(
        "{REPLAN} (remaining capacity shortfall {previous:.6e} bit/s at full linearized effort)"
    )))
}

fn solve_step(
    s: &Scenario,
    p0: &PowerVector,
    links: &BTreeSet<LinkId>,
    subchannels: &BTreeSet<usize>,
    opts: &RetuneOptions,
) -> Result<(LpSolution, VarIndex)> {
    let a = approx::build(s, p0, opts.segments)?;
    let (lp, vi) = build_retune_lp(s, links, subchannels, &a, &opts.formulation)?;
    Ok((solve_lp(&lp, &opts.solver), vi))
}

/// Re-tunes the powers of `current` for scenario `s`, keeping its active
/// links and subchannels. The returned plan is the lowest-power iterate that
/// passes the exact feasibility check.
pub fn retune(s: &Scenario, current: &Plan, opts: &RetuneOptions) -> Result<(Plan, IterationTrace)> {
    opts.check()?;
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    current.check_against(s)?;
    let links = &current.active_links;
    let subchannels = &current.active_subchannels;
    let p_tilde = s.total_power_bound();

    let mut expansion = project_onto_bounds(s, &current.powers, links, subchannels);
    let (mut sol, mut vi) = solve_step(s, &expansion, links, subchannels, opts)?;
    if sol.status == LpStatus::Infeasible {
        info!("current powers do not linearize to a feasible problem; restoring");
        expansion = restore(s, links, subchannels, opts)?;
        (sol, vi) = solve_step(s, &expansion, links, subchannels, opts)?;
    }

    let input_feasible = current.feasible
        && check_feasibility_with(s, current, opts.feasibility_tol, opts.formulation.c5_dl_direction)?.feasible;
    let mut trace = IterationTrace::new();
    let mut best: Option<Plan> = None;
    for m in 1..=opts.max_outer_iters {
        if m > 1 {
            (sol, vi) = solve_step(s, &expansion, links, subchannels, opts)?;
        }
        if sol.status != LpStatus::Optimal {
            if best.is_none() {
                return Err(match sol.status {
                    LpStatus::Infeasible => Error::Infeasible(REPLAN.into()),
                    other => Error::Solver(format!("re-tuning LP ended with status {other}")),
                });
            }
            warn!(
                "iteration {m}: LP ended with status {}; keeping the best iterate",
                sol.status
            );
            break;
        }
        let mut plan = Plan::empty(s);
        plan.powers = powers_from(&vi, &sol.x, links, subchannels);
        plan.active_links = links.clone();
        plan.active_subchannels = subchannels.clone();
        match route_flows(s, &plan.powers, links, &opts.formulation)? {
            Some((ul, dl)) => {
                plan.flow_ul = ul;
                plan.flow_dl = dl;
            }
            None => {
                for l in 0..s.num_links() {
                    plan.flow_ul[l] = sol.x[vi.c_ul(l)].max(0.0);
                    plan.flow_dl[l] = sol.x[vi.c_dl(l)].max(0.0);
                }
            }
        }
        plan.refresh(s)?;
        let report = check_feasibility_with(s, &plan, opts.feasibility_tol, opts.formulation.c5_dl_direction)?;
        plan.feasible = report.feasible;
        if !report.feasible {
            warn!("iterate {m} failed exact validation:\n{report}");
        }
        let change = plan.powers.max_abs_diff(&expansion);
        trace.push(IterationRecord {
            iteration: m,
            objective: plan.total_power(),
            status: sol.status.to_string(),
            max_power_change: change,
            bnb_nodes: 0,
            gap: 0.0,
            lp_iterations: sol.iterations,
            feasible: plan.feasible,
        });
        info!(
            "iteration {m}: total power {:.9e} W, max |dX| {change:.3e}",
            plan.total_power()
        );
        expansion = plan.powers.clone();
        if plan.feasible && best.as_ref().is_none_or(|b| plan.total_power() < b.total_power()) {
            best = Some(plan);
        }
        if change < opts.rel_power_tol * p_tilde {
            if m == 1 && input_feasible {
                // Already a fixed point; keep the caller's plan verbatim.
                let mut plan = current.clone();
                plan.trace = trace.clone();
                return Ok((plan, trace));
            }
            break;
        }
    }
    let mut plan = best.ok_or_else(|| Error::Solver("no re-tuned iterate passed exact validation".into()))?;
    plan.trace = trace.clone();
    Ok((plan, trace))
}

/// Looks for a single power entry that can be lowered by
/// `stationarity_tol · P̃` (or to zero) while the plan stays exactly
/// feasible, with flows re-routed. Returns the first such `(link,
/// subchannel)`, or `None` if the plan is stationary in this sense.
pub fn stationarity_probe(s: &Scenario, plan: &Plan, opts: &RetuneOptions) -> Result<Option<(LinkId, usize)>> {
    let step = opts.stationarity_tol * s.total_power_bound();
    for &l in &plan.active_links {
        for &f in &plan.active_subchannels {
            let x = plan.powers.get(l, f);
            if x <= 0.0 {
                continue;
            }
            let mut probe = plan.clone();
            probe.powers.set(l, f, (x - step).max(0.0));
            let Some((ul, dl)) = route_flows(s, &probe.powers, &probe.active_links, &opts.formulation)? else {
                continue;
            };
            probe.flow_ul = ul;
            probe.flow_dl = dl;
            let report = check_feasibility_with(s, &probe, opts.feasibility_tol, opts.formulation.c5_dl_direction)?;
            if report.feasible {
                return Ok(Some((l, f)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_node;
    use crate::planner::{plan, PlanOptions};

    fn x_star(lambda: f64) -> f64 {
        1e-10 * (2f64.powf(2e7 / 1e7) - 1.0) / lambda
    }

    #[test]
    fn fixed_point_needs_one_iteration() {
        let s = two_node(1);
        let (planned, _) = plan(&s, &PlanOptions::default()).unwrap();
        let (tuned, trace) = retune(&s, &planned, &RetuneOptions::default()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(tuned.powers, planned.powers);
        assert_eq!(tuned.active_links, planned.active_links);
        assert_eq!(tuned.active_subchannels, planned.active_subchannels);
    }

    #[test]
    fn degraded_gain_doubles_power() {
        let s = two_node(1);
        let (planned, _) = plan(&s, &PlanOptions::default()).unwrap();
        let mut worse = s.clone();
        worse.gains.lambda[0][0] = 1e-6 * 10f64.powf(-0.3);
        let (tuned, trace) = retune(&worse, &planned, &RetuneOptions::default()).unwrap();
        let target = x_star(worse.gains.lambda[0][0]);
        assert!(
            (tuned.powers.get(0, 0) - target).abs() <= 1e-2 * target,
            "{} vs {target}",
            tuned.powers.get(0, 0)
        );
        assert!(tuned.feasible);
        assert!(trace.len() <= 10);
        for w in trace.windows(2) {
            assert!(w[1].objective <= w[0].objective * (1.0 + 1e-9));
        }
        assert_eq!(
            stationarity_probe(&worse, &tuned, &RetuneOptions::default()).unwrap(),
            None
        );
    }

    #[test]
    fn over_demand_requires_replanning() {
        let s = two_node(1);
        let (planned, _) = plan(&s, &PlanOptions::default()).unwrap();
        let mut more = s.clone();
        more.nodes[1].rate_ul = 3e8;
        match retune(&more, &planned, &RetuneOptions::default()) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("re-plan required"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_respects_caps_and_budgets() {
        let mut s = two_node(2);
        s.nodes[1].power_budget = 0.5;
        let p = PowerVector::from_rows(&[vec![2.0, 2.0], vec![-1.0, 0.3]]).unwrap();
        let q = project_onto_bounds(&s, &p, &[0, 1].into(), &[0, 1].into());
        assert!((q.link_total(0) - 0.5).abs() < 1e-15);
        assert_eq!(q.get(1, 0), 0.0);
        assert_eq!(q.get(1, 1), 0.3);
        let r = project_onto_bounds(&s, &p, &[1].into(), &[1].into());
        assert_eq!(r.to_rows(), vec![vec![0.0, 0.0], vec![0.0, 0.3]]);
    }
}
