//! Exact feasibility checking of plans, the half-duplex comparison variant and
//! the small-instance oracle cross-check.

use serde::{Deserialize, Serialize};

use crate::approx;
use crate::error::{Error, Result};
use crate::formulation::{build_milp, C5Direction};
use crate::model::{capacity_matrix, self_interference_pairs, Plan, Scenario};
use crate::planner::{initial_point, PlanOptions};
use crate::solver::{brute_force_milp, solve_milp, LpStatus};

/// Worst normalized violation within one constraint family. Positive values
/// are violations, negative values are slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    pub description: String,
    pub rows: usize,
    pub max_violation: f64,
    /// Label of the row attaining `max_violation`.
    pub worst_row: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub tol: f64,
    pub feasible: bool,
    pub families: Vec<FamilyCheck>,
}

impl FeasibilityReport {
    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.family == name)
    }

    pub fn max_violation(&self) -> f64 {
        self.families
            .iter()
            .filter(|f| f.rows > 0)
            .map(|f| f.max_violation)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<6} {:<44} {:>6} {:>14}  worst row",
            "family", "constraint", "rows", "max violation"
        )?;
        for c in &self.families {
            let flag = if c.rows > 0 && c.max_violation > self.tol {
                "  VIOLATED"
            } else {
                ""
            };
            writeln!(
                f,
                "{:<6} {:<44} {:>6} {:>14.5e}  {}{}",
                c.family,
                c.description,
                c.rows,
                c.max_violation + 0.0,
                c.worst_row.as_deref().unwrap_or("-"),
                flag
            )?;
        }
        write!(
            f,
            "{} at tol {:e}",
            if self.feasible { "feasible" } else { "INFEASIBLE" },
            self.tol
        )
    }
}

struct Family {
    check: FamilyCheck,
}

impl Family {
    fn new(family: &str, description: &str) -> Self {
        Self {
            check: FamilyCheck {
                family: family.into(),
                description: description.into(),
                rows: 0,
                max_violation: 0.0,
                worst_row: None,
            },
        }
    }

    fn push(&mut self, v: f64, row: impl FnOnce() -> String) {
        if self.check.rows == 0 || v > self.check.max_violation {
            self.check.max_violation = v;
            self.check.worst_row = Some(row());
        }
        self.check.rows += 1;
    }

    fn le(&mut self, lhs: f64, rhs: f64, row: impl FnOnce() -> String) {
        self.push((lhs - rhs) / rhs.abs().max(1.0), row);
    }

    fn eq(&mut self, lhs: f64, rhs: f64, row: impl FnOnce() -> String) {
        self.push((lhs - rhs).abs() / rhs.abs().max(1.0), row);
    }
}

/// Checks every constraint family against the exact capacity model, with
/// the delay row for DL summed over outgoing links.
pub fn check_feasibility(s: &Scenario, p: &Plan, tol: f64) -> Result<FeasibilityReport> {
    check_feasibility_with(s, p, tol, C5Direction::AsPrinted)
}

pub fn check_feasibility_with(
    s: &Scenario,
    p: &Plan,
    tol: f64,
    c5_dl_direction: C5Direction,
) -> Result<FeasibilityReport> {
    p.check_against(s)?;
    let (nl, nf) = (s.num_links(), s.num_subchannels());
    let x = &p.powers;
    let p_tilde = s.total_power_bound();
    let link_on = |l: usize| if p.active_links.contains(&l) { 1.0 } else { 0.0 };
    let sub_on = |f: usize| if p.active_subchannels.contains(&f) { 1.0 } else { 0.0 };

    let mut c0 = Family::new("C0", "powers and flows nonnegative");
    for l in 0..nl {
        for f in 0..nf {
            c0.le(-x.get(l, f), 0.0, || format!("x[{l}][{f}]"));
        }
        c0.le(-p.flow_ul[l], 0.0, || format!("flow_ul[{l}]"));
        c0.le(-p.flow_dl[l], 0.0, || format!("flow_dl[{l}]"));
    }

    let mut c1 = Family::new("C1", "link power only on active links");
    for l in 0..nl {
        c1.le(x.link_total(l), link_on(l) * p_tilde, || format!("link {l}"));
    }
    let mut c2 = Family::new("C2", "subchannel power only on active subchannels");
    for f in 0..nf {
        c2.le(x.subchannel_total(f), sub_on(f) * p_tilde, || format!("subchannel {f}"));
    }
    let mut c3 = Family::new("C3", "per-link power cap");
    for (l, link) in s.links.iter().enumerate() {
        c3.le(x.link_total(l), link.p_max, || format!("link {l}"));
    }
    let mut c4 = Family::new("C4", "per-node power budget");
    for node in &s.nodes {
        let used: f64 = s.outgoing(node.id).map(|l| x.link_total(l)).sum();
        c4.le(used, node.power_budget, || format!("node {}", node.id));
    }

    let mut c5 = Family::new("C5", "average UL/DL delay");
    if s.limits.delay_ul.is_finite() {
        let lhs: f64 = s
            .nodes
            .iter()
            .map(|n| n.proc_delay * s.outgoing(n.id).map(|l| p.flow_ul[l]).sum::<f64>())
            .sum();
        c5.le(lhs, s.limits.delay_ul * s.total_rate_ul(), || "UL".into());
    }
    if s.limits.delay_dl.is_finite() {
        let lhs: f64 = s
            .nodes
            .iter()
            .map(|n| {
                let sum: f64 = match c5_dl_direction {
                    C5Direction::AsPrinted => s.outgoing(n.id).map(|l| p.flow_dl[l]).sum(),
                    C5Direction::Incoming => s.incoming(n.id).map(|l| p.flow_dl[l]).sum(),
                };
                n.proc_delay * sum
            })
            .sum();
        c5.le(lhs, s.limits.delay_dl * s.total_rate_dl(), || "DL".into());
    }

    let mut c6 = Family::new("C6", "access interference threshold");
    for (k, &f) in s.spectrum.access_subchannels.iter().enumerate() {
        for node in &s.nodes {
            let limit = s.limits.i_th[node.id][k];
            if limit.is_finite() {
                let lhs: f64 = (0..nl).map(|l| s.gains.omega(l, node.id, f) * x.get(l, f)).sum();
                c6.le(lhs, limit, || format!("node {} subchannel {f}", node.id));
            }
        }
    }

    let caps = capacity_matrix(s, x)?;
    let mut c7 = Family::new("C7", "link flow within exact capacity");
    for (l, link) in s.links.iter().enumerate() {
        let cap = link.wired_capacity + caps[l].iter().sum::<f64>();
        c7.le(p.flow_ul[l] + p.flow_dl[l], cap, || format!("link {l}"));
    }

    let mut c8 = Family::new("C8", "UL flow conservation at non-roots");
    let mut c9 = Family::new("C9", "DL flow conservation at non-roots");
    for node in s.non_roots() {
        let out_ul: f64 = s.outgoing(node.id).map(|l| p.flow_ul[l]).sum();
        let in_ul: f64 = s.incoming(node.id).map(|l| p.flow_ul[l]).sum();
        c8.eq(out_ul - in_ul, node.rate_ul, || format!("node {}", node.id));
        let out_dl: f64 = s.outgoing(node.id).map(|l| p.flow_dl[l]).sum();
        let in_dl: f64 = s.incoming(node.id).map(|l| p.flow_dl[l]).sum();
        c9.eq(in_dl - out_dl, node.rate_dl, || format!("node {}", node.id));
    }
    let mut c10 = Family::new("C10", "UL traffic delivered to roots");
    let mut c11 = Family::new("C11", "DL traffic sourced at roots");
    let (mut ul, mut dl) = (0.0, 0.0);
    for root in s.roots() {
        ul += s.incoming(root.id).map(|l| p.flow_ul[l]).sum::<f64>()
            - s.outgoing(root.id).map(|l| p.flow_ul[l]).sum::<f64>();
        dl += s.outgoing(root.id).map(|l| p.flow_dl[l]).sum::<f64>()
            - s.incoming(root.id).map(|l| p.flow_dl[l]).sum::<f64>();
    }
    c10.eq(ul, s.total_rate_ul(), || "roots".into());
    c11.eq(dl, s.total_rate_dl(), || "roots".into());

    let families: Vec<FamilyCheck> = [c0, c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11]
        .into_iter()
        .map(|f| f.check)
        .collect();
    let feasible = families.iter().all(|f| f.rows == 0 || f.max_violation <= tol);
    Ok(FeasibilityReport {
        tol,
        feasible,
        families,
    })
}

/// Self-interference gain used to forbid co-channel transmit/receive.
pub const HD_SELF_INTERFERENCE: f64 = 1e6;

/// The half-duplex counterpart of `s`: every self-interference entry is set
/// to [`HD_SELF_INTERFERENCE`], so a node cannot usefully transmit and receive
/// on the same subchannel.
pub fn hd_variant(s: &Scenario) -> Scenario {
    let mut out = s.clone();
    for (aggressor, victim) in self_interference_pairs(s) {
        for f in 0..s.num_subchannels() {
            out.gains.set_gamma(victim, aggressor, f, HD_SELF_INTERFERENCE);
        }
    }
    out
}

/// Largest number of binaries [`cross_check_small`] accepts.
pub const CROSS_CHECK_MAX_BINARIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub num_binaries: usize,
    pub bnb_status: LpStatus,
    pub brute_status: LpStatus,
    pub bnb_objective: Option<f64>,
    pub brute_objective: Option<f64>,
    /// `|bnb - brute| / max(1, |brute|)`, zero when both are infeasible.
    pub relative_delta: f64,
    pub fixings_agree: bool,
}

/// Solves the first planning MILP (linearized at the initial point) with both
/// branch-and-bound and exhaustive enumeration.
pub fn cross_check_small(s: &Scenario, opts: &PlanOptions) -> Result<ComparisonReport> {
    let a = approx::build(s, &initial_point(s), opts.segments)?;
    let (lp, _) = build_milp(s, &a, &opts.formulation)?;
    let k = lp.integral.len();
    if k > CROSS_CHECK_MAX_BINARIES {
        return Err(Error::TooManyBinaries(k, CROSS_CHECK_MAX_BINARIES));
    }
    let (bnb, _) = solve_milp(&lp, &opts.solver);
    let brute = brute_force_milp(&lp, &opts.solver)?;
    let objective = |sol: &crate::solver::LpSolution| sol.is_optimal().then_some(sol.objective);
    let (a_obj, b_obj) = (objective(&bnb), objective(&brute));
    let relative_delta = match (a_obj, b_obj) {
        (Some(a), Some(b)) => (a - b).abs() / b.abs().max(1.0),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let fixings_agree = match (a_obj, b_obj) {
        (Some(_), Some(_)) => lp.integral.iter().all(|&j| bnb.x[j].round() == brute.x[j].round()),
        (None, None) => true,
        _ => false,
    };
    Ok(ComparisonReport {
        num_binaries: k,
        bnb_status: bnb.status,
        brute_status: brute.status,
        bnb_objective: a_obj,
        brute_objective: b_obj,
        relative_delta,
        fixings_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_node;
    use crate::model::PowerVector;

    #[test]
    fn empty_plan_on_zero_demand() {
        let mut s = two_node(2);
        s.nodes[1].rate_ul = 0.0;
        let p = Plan::empty(&s);
        let r = check_feasibility(&s, &p, 1e-9).unwrap();
        assert!(r.feasible);
        assert!(r.max_violation() <= 0.0);
    }

    #[test]
    fn node_budget_overrun_is_reported_relative() {
        let mut s = two_node(1);
        s.nodes[1].rate_ul = 0.0;
        s.links[0].p_max = 2.0;
        let mut p = Plan::empty(&s);
        p.powers = PowerVector::from_rows(&[vec![1.1], vec![0.0]]).unwrap();
        p.active_links.insert(0);
        p.active_subchannels.insert(0);
        let r = check_feasibility(&s, &p, 1e-9).unwrap();
        let c4 = r.family("C4").unwrap();
        assert!((c4.max_violation - 0.1).abs() < 1e-12);
        assert_eq!(c4.worst_row.as_deref(), Some("node 1"));
        assert!(!r.feasible);
    }

    #[test]
    fn exact_capacity_bounds_flow() {
        let s = two_node(1);
        let mut p = Plan::empty(&s);
        p.powers = PowerVector::from_rows(&[vec![3e-4], vec![0.0]]).unwrap();
        p.active_links.insert(0);
        p.active_subchannels.insert(0);
        p.flow_ul[0] = 2e7;
        let r = check_feasibility(&s, &p, 1e-9).unwrap();
        assert!(r.feasible, "{r}");
        p.powers.set(0, 0, 2.9e-4);
        let r = check_feasibility(&s, &p, 1e-9).unwrap();
        assert!(r.family("C7").unwrap().max_violation > 1e-3);
    }

    #[test]
    fn hd_variant_only_touches_self_interference() {
        let s = two_node(2);
        let hd = hd_variant(&s);
        assert_eq!(hd.gains.gamma(1, 0, 0), HD_SELF_INTERFERENCE);
        assert_eq!(hd.gains.gamma(0, 1, 1), HD_SELF_INTERFERENCE);
        assert_eq!(hd.gains.lambda, s.gains.lambda);
    }

    #[test]
    fn cross_check_on_two_links() {
        let s = two_node(2);
        let r = cross_check_small(&s, &PlanOptions::default()).unwrap();
        assert_eq!(r.num_binaries, 4);
        assert!(r.relative_delta <= 1e-6, "{r:?}");
        assert_eq!(r.bnb_status, r.brute_status);
    }
}
