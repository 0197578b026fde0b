//! Iterative minimum-cost planning: solve the linearized MILP, move the
//! expansion point to its solution, repeat until the cost settles.

use std::io::Write;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::approx;
use crate::error::{Error, Result};
use crate::formulation::{build_milp, extract_plan, route_flows, FormulationOptions, VarIndex};
use crate::maxflow::diagnose_cuts;
use crate::model::{validate_scenario, IterationRecord, IterationTrace, Plan, PowerVector, Scenario};
use crate::solver::{solve_milp_hinted, BnbStats, LpSolution, LpStatus, SolverOptions};
use crate::validate::check_feasibility_with;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub segments: usize,
    pub max_outer_iters: usize,
    pub rel_cost_tol: f64,
    /// Relative tolerance of the exact feasibility check on every iterate.
    pub feasibility_tol: f64,
    pub solver: SolverOptions,
    pub formulation: FormulationOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            segments: 16,
            max_outer_iters: 20,
            rel_cost_tol: 1e-4,
            feasibility_tol: 1e-9,
            solver: SolverOptions::default(),
            formulation: FormulationOptions::default(),
        }
    }
}

impl PlanOptions {
    pub fn check(&self) -> Result<()> {
        if self.segments == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter(
                "segments and max_outer_iters must be >= 1".into(),
            ));
        }
        if !(self.rel_cost_tol > 0.0) || !(self.feasibility_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Every link and subchannel on: each node splits its budget evenly over its
/// outgoing links (capped per link) and each link splits evenly over the
/// subchannels.
pub fn initial_point(s: &Scenario) -> PowerVector {
    let nf = s.num_subchannels();
    let mut p = PowerVector::zeros(s.num_links(), nf);
    for (l, link) in s.links.iter().enumerate() {
        let outdegree = s.outgoing(link.from).count() as f64;
        let per_link = link.p_max.min(s.nodes[link.from].power_budget / outdegree);
        for f in 0..nf {
            p.set(l, f, per_link / nf as f64);
        }
    }
    p
}

/// Like [`initial_point`] but with each link on a single subchannel, chosen
/// greedily to avoid subchannels already used by links sharing an endpoint.
pub fn orthogonal_point(s: &Scenario) -> PowerVector {
    let nf = s.num_subchannels();
    let mut p = PowerVector::zeros(s.num_links(), nf);
    if nf == 0 {
        return p;
    }
    let all_on = initial_point(s);
    let mut chosen: Vec<usize> = Vec::with_capacity(s.num_links());
    for (l, link) in s.links.iter().enumerate() {
        let touches = |k: usize| {
            let other = &s.links[k];
            [other.from, other.to].iter().any(|n| *n == link.from || *n == link.to)
        };
        let mut conflicts = vec![0usize; nf];
        let mut load = vec![0usize; nf];
        for (k, &f) in chosen.iter().enumerate() {
            load[f] += 1;
            if touches(k) {
                conflicts[f] += 1;
            }
        }
        let f = (0..nf).min_by_key(|&f| (conflicts[f], load[f])).unwrap_or(0);
        chosen.push(f);
        p.set(l, f, all_on.link_total(l));
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Optimal,
    /// Some MILP hit its node budget; the plan is feasible but possibly not
    /// the best the linearization admits.
    NotProven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    pub trace: IterationTrace,
    pub status: PlanStatus,
    /// Index into `trace` of the returned plan.
    pub best_iteration: usize,
}

fn binary_hint(vi: &VarIndex, plan: &Plan) -> Vec<(usize, f64)> {
    let mut hint: Vec<(usize, f64)> = (0..vi.num_links)
        .map(|l| (vi.j_link(l), if plan.active_links.contains(&l) { 1.0 } else { 0.0 }))
        .collect();
    hint.extend((0..vi.num_subchannels).map(|f| {
        (
            vi.j_sub(f),
            if plan.active_subchannels.contains(&f) { 1.0 } else { 0.0 },
        )
    }));
    hint
}

fn infeasibility_message(s: &Scenario) -> String {
    match diagnose_cuts(s) {
        Some(cut) => cut.to_string(),
        None => "no plan satisfies the power, delay, interference-threshold and capacity \
                 constraints together (the cut check found no capacity bottleneck)"
            .into(),
    }
}

/// Turns a MILP solution into a validated plan: extract, re-route the flows
/// over exact capacities and run the exact feasibility check.
fn finish_plan(s: &Scenario, vi: &VarIndex, sol: &LpSolution, opts: &PlanOptions) -> Result<Plan> {
    let mut plan = extract_plan(s, vi, &sol.x, opts.solver.int_tol)?;
    if let Some((ul, dl)) = route_flows(s, &plan.powers, &plan.active_links, &opts.formulation)? {
        plan.flow_ul = ul;
        plan.flow_dl = dl;
    }
    plan.refresh(s)?;
    let report = check_feasibility_with(s, &plan, opts.feasibility_tol, opts.formulation.c5_dl_direction)?;
    if !report.feasible {
        warn!("iterate failed exact validation:\n{report}");
    }
    plan.feasible = report.feasible;
    Ok(plan)
}

/// Runs the planner, returning the best validated iterate and the trace.
pub fn plan(s: &Scenario, opts: &PlanOptions) -> Result<(Plan, IterationTrace)> {
    let out = plan_detailed(s, opts)?;
    Ok((out.plan, out.trace))
}

pub fn plan_detailed(s: &Scenario, opts: &PlanOptions) -> Result<PlanOutcome> {
    opts.check()?;
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    if let Some(cut) = diagnose_cuts(s) {
        return Err(Error::Infeasible(cut.to_string()));
    }
    let p_tilde = s.total_power_bound();
    let mut expansion = initial_point(s);
    let mut trace: IterationTrace = Vec::new();
    let mut best: Option<(Plan, usize)> = None;
    let mut last: Option<Plan> = None;
    let mut status = PlanStatus::Optimal;

    for m in 1..=opts.max_outer_iters {
        let solve = |p0: &PowerVector, hint: &[(usize, f64)]| -> Result<(LpSolution, BnbStats, VarIndex)> {
            let a = approx::build(s, p0, opts.segments)?;
            let (lp, vi) = build_milp(s, &a, &opts.formulation)?;
            let (sol, stats) = solve_milp_hinted(&lp, &opts.solver, hint);
            Ok((sol, stats, vi))
        };
        let hint = match &last {
            Some(prev) => binary_hint(&VarIndex::new(s.num_links(), s.num_subchannels(), true), prev),
            None => Vec::new(),
        };
        let (mut sol, mut stats, vi) = solve(&expansion, &hint)?;
        if m == 1 && sol.status == LpStatus::Infeasible {
            // The all-on start prices every co-channel interferer as if it
            // stayed on. Try starts with less overlap before giving up.
            let fallbacks = [
                ("orthogonal", orthogonal_point(s)),
                ("zero-power", PowerVector::zeros(s.num_links(), s.num_subchannels())),
            ];
            for (name, start) in fallbacks {
                info!("first MILP infeasible; retrying from the {name} point");
                expansion = start;
                (sol, stats, _) = solve(&expansion, &hint)?;
                if sol.status != LpStatus::Infeasible {
                    break;
                }
            }
        }
        debug!(
            "iteration {m}: {} objective {:.9e} nodes {}",
            sol.status, sol.objective, stats.nodes_explored
        );

        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::NotProven if !sol.x.is_empty() => status = PlanStatus::NotProven,
            LpStatus::NotProven => {
                if best.is_none() {
                    return Err(Error::NotProven(format!(
                        "node budget of {} exhausted before any plan was found",
                        opts.solver.max_nodes
                    )));
                }
                status = PlanStatus::NotProven;
                break;
            }
            LpStatus::Infeasible if m == 1 => {
                return Err(Error::Infeasible(infeasibility_message(s)));
            }
            other => {
                if best.is_none() {
                    return Err(Error::Solver(format!("planning MILP ended with status {other}")));
                }
                warn!("iteration {m}: MILP ended with status {other}; keeping the best iterate");
                break;
            }
        }

        let plan = finish_plan(s, &vi, &sol, opts)?;
        let change = plan.powers.max_abs_diff(&expansion);
        trace.push(IterationRecord {
            iteration: m,
            objective: plan.cost.total,
            status: sol.status.to_string(),
            max_power_change: change,
            bnb_nodes: stats.nodes_explored,
            gap: stats.gap,
            lp_iterations: sol.iterations,
            feasible: plan.feasible,
        });
        info!("iteration {m}: cost {:.9e}, max |dX| {:.3e}", plan.cost.total, change);

        let prev_cost = last.as_ref().map(|p| p.cost.total);
        if plan.feasible && best.as_ref().is_none_or(|(b, _)| plan.cost.total < b.cost.total) {
            best = Some((plan.clone(), trace.len() - 1));
        }
        expansion = plan.powers.clone();
        let settled = match prev_cost {
            Some(prev) => {
                let rel = (plan.cost.total - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
                rel < opts.rel_cost_tol && change < 1e-6 * p_tilde
            }
            None => false,
        };
        let is_zero = plan.cost.total == 0.0 && plan.feasible;
        last = Some(plan);
        if settled || is_zero {
            break;
        }
    }

    let (mut plan, best_iteration) = match best {
        Some(b) => b,
        None => {
            let plan = last.ok_or_else(|| Error::Solver("planner produced no iterate".into()))?;
            let k = trace.len() - 1;
            (plan, k)
        }
    };
    plan.trace = trace.clone();
    Ok(PlanOutcome {
        plan,
        trace,
        status,
        best_iteration,
    })
}

#[derive(Serialize)]
struct TraceRow<'a> {
    iteration: usize,
    cost: f64,
    gap: f64,
    nodes: usize,
    status: &'a str,
    max_power_change: f64,
    lp_iterations: usize,
    feasible: bool,
}

/// Writes the trace as CSV with columns
/// `iteration,cost,gap,nodes,status,max_power_change,lp_iterations,feasible`.
/// For the re-tuner `cost` is the total power.
pub fn write_trace_csv<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(TraceRow {
            iteration: r.iteration,
            cost: r.objective,
            gap: r.gap,
            nodes: r.bnb_nodes,
            status: &r.status,
            max_power_change: r.max_power_change,
            lp_iterations: r.lp_iterations,
            feasible: r.feasible,
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}
