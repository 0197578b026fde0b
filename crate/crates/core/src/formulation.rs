//! Translation of a scenario plus a capacity linearization into LP/MILP data,
//! and of solver vectors back into plans.
//!
//! Row families follow the constraint labels used throughout the crate:
//! C1/C2 activation, C3 per-link power, C4 per-node power, C5 delay, C6
//! access interference, C7 link capacity (with one `cap` row per chord piece),
//! C8/C9 per-node flow conservation and C10/C11 root totals.
//!
//! The linearized capacity of a pair whose own power is zero can be very
//! negative. In the MILP, activation enters the rows as follows:
//!
//! * an inactive link pins every `C̃` of that link to zero and a deficit
//!   slack `V ∈ [0, D·(1 - J_l)]` absorbs the negative linearized value in the
//!   chord rows, where `D` is the pair's deficit bound;
//! * an active link has `V = 0` and `C̃ ≥ -(wired + Σ_f Ubar)`, below which
//!   no flow could be carried anyway;
//! * an inactive subchannel relaxes each chord row by `max(0, -rhs)` so `C̃`
//!   may rest at zero instead of at the (pessimistic) linearized value.
//!
//! Keeping `D` out of the flow and chord right-hand sides matters: with
//! strong self-interference it can exceed the demands by fifteen orders of
//! magnitude.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::approx::CapacityApprox;
use crate::error::{Error, Result};
use crate::model::{LinkId, Plan, PowerVector, Scenario};
use crate::solver::{solve_lp, LazyTag, LinearProgram, LpStatus, SolverOptions};

/// Which links the downlink delay row sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum C5Direction {
    /// Outgoing links, for both UL and DL.
    #[default]
    AsPrinted,
    /// Incoming links for DL.
    Incoming,
}

impl std::fmt::Display for C5Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            C5Direction::AsPrinted => "as-printed",
            C5Direction::Incoming => "incoming",
        })
    }
}

impl std::str::FromStr for C5Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(C5Direction::AsPrinted),
            "incoming" => Ok(C5Direction::Incoming),
            other => Err(Error::InvalidParameter(format!(
                "unknown C5 direction {other:?}; expected as-printed or incoming"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulationOptions {
    pub c5_dl_direction: C5Direction,
    /// Safety margin subtracted from every chord row, as a fraction of `B`.
    pub capacity_margin: f64,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        Self {
            c5_dl_direction: C5Direction::AsPrinted,
            capacity_margin: 1e-8,
        }
    }
}

/// Dense variable layout: `X`, `C_ul`, `C_dl`, `C̃`, then in the MILP `J_L`,
/// `J_F` and the deficit slacks `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    pub num_links: usize,
    pub num_subchannels: usize,
    /// Whether the activation binaries are present.
    pub has_binaries: bool,
}

impl VarIndex {
    pub fn new(num_links: usize, num_subchannels: usize, has_binaries: bool) -> Self {
        Self {
            num_links,
            num_subchannels,
            has_binaries,
        }
    }

    fn lf(&self) -> usize {
        self.num_links * self.num_subchannels
    }

    pub fn x(&self, link: LinkId, f: usize) -> usize {
        link * self.num_subchannels + f
    }

    pub fn c_ul(&self, link: LinkId) -> usize {
        self.lf() + link
    }

    pub fn c_dl(&self, link: LinkId) -> usize {
        self.lf() + self.num_links + link
    }

    pub fn c_tilde(&self, link: LinkId, f: usize) -> usize {
        self.lf() + 2 * self.num_links + link * self.num_subchannels + f
    }

    pub fn j_link(&self, link: LinkId) -> usize {
        assert!(self.has_binaries, "layout has no activation variables");
        2 * self.lf() + 2 * self.num_links + link
    }

    pub fn j_sub(&self, f: usize) -> usize {
        assert!(self.has_binaries, "layout has no activation variables");
        2 * self.lf() + 3 * self.num_links + f
    }

    /// Deficit slack of an inactive link's pair.
    pub fn deficit(&self, link: LinkId, f: usize) -> usize {
        assert!(self.has_binaries, "layout has no activation variables");
        2 * self.lf() + 3 * self.num_links + self.num_subchannels + link * self.num_subchannels + f
    }

    pub fn total(&self) -> usize {
        let base = 2 * self.lf() + 2 * self.num_links;
        if self.has_binaries {
            base + self.num_links + self.num_subchannels + self.lf()
        } else {
            base
        }
    }
}

fn check_dims(s: &Scenario, approx: &CapacityApprox) -> Result<()> {
    if approx.num_links() != s.num_links() || (s.num_links() > 0 && approx.num_subchannels() != s.num_subchannels()) {
        return Err(Error::DimensionMismatch(format!(
            "linearization is {} x {}, scenario is {} x {}",
            approx.num_links(),
            approx.num_subchannels(),
            s.num_links(),
            s.num_subchannels()
        )));
    }
    Ok(())
}

/// Shared builder. `enabled[l][f]` says whether `X_{l,f}` may be positive.
struct Builder<'a> {
    s: &'a Scenario,
    approx: &'a CapacityApprox,
    vi: VarIndex,
    opts: FormulationOptions,
    enabled: Vec<Vec<bool>>,
    lp: LinearProgram,
}

impl Builder<'_> {
    /// How far below zero `C̃` may need to go when the link is off.
    fn raw_deficit(&self, l: LinkId, f: usize) -> f64 {
        self.approx.get(l, f).deficit_bound + self.opts.capacity_margin * self.s.spectrum.bandwidth
    }

    /// Lower bound magnitude of `C̃` on an active link, which never benefits
    /// from `C̃ < -(wired + Σ_f Ubar)`.
    fn deficit(&self, l: LinkId, f: usize) -> f64 {
        let nf = self.s.num_subchannels();
        let cap = self.s.links[l].wired_capacity
            + (0..nf).map(|g| self.approx.get(l, g).capacity_bound).sum::<f64>()
            + self.opts.capacity_margin * self.s.spectrum.bandwidth;
        self.raw_deficit(l, f).min(cap)
    }

    fn add_variables(&mut self, power_cost: f64) {
        let s = self.s;
        let (nl, nf) = (s.num_links(), s.num_subchannels());
        let ul_cap = s.total_rate_ul();
        let dl_cap = s.total_rate_dl();
        for l in 0..nl {
            let cap = s.power_cap(l);
            for f in 0..nf {
                let ub = if self.enabled[l][f] { cap } else { 0.0 };
                self.lp.add_var(format!("x_{l}_{f}"), 0.0, ub, power_cost);
            }
        }
        for l in 0..nl {
            self.lp.add_var(format!("cul_{l}"), 0.0, ul_cap, 0.0);
        }
        for l in 0..nl {
            self.lp.add_var(format!("cdl_{l}"), 0.0, dl_cap, 0.0);
        }
        for l in 0..nl {
            for f in 0..nf {
                let (lo, hi) = if self.enabled[l][f] || self.vi.has_binaries {
                    (-self.deficit(l, f), self.approx.get(l, f).capacity_bound)
                } else {
                    (0.0, 0.0)
                };
                self.lp.add_var(format!("ct_{l}_{f}"), lo, hi, 0.0);
            }
        }
    }

    fn add_power_rows(&mut self) {
        let s = self.s;
        let (nl, nf, vi) = (s.num_links(), s.num_subchannels(), self.vi);
        for l in 0..nl {
            let terms = (0..nf).map(|f| (vi.x(l, f), 1.0)).collect();
            self.lp.add_le(format!("C3_{l}"), terms, s.links[l].p_max);
        }
        for node in &s.nodes {
            let terms: Vec<(usize, f64)> = s
                .outgoing(node.id)
                .flat_map(|l| (0..nf).map(move |f| (vi.x(l, f), 1.0)))
                .collect();
            if !terms.is_empty() {
                self.lp.add_le(format!("C4_{}", node.id), terms, node.power_budget);
            }
        }
    }

    fn add_delay_rows(&mut self) {
        let s = self.s;
        let vi = self.vi;
        if s.limits.delay_ul.is_finite() {
            let terms = s
                .nodes
                .iter()
                .flat_map(|n| s.outgoing(n.id).map(move |l| (vi.c_ul(l), n.proc_delay)))
                .collect();
            self.lp.add_le("C5_ul", terms, s.limits.delay_ul * s.total_rate_ul());
        }
        if s.limits.delay_dl.is_finite() {
            let terms: Vec<(usize, f64)> = match self.opts.c5_dl_direction {
                C5Direction::AsPrinted => s
                    .nodes
                    .iter()
                    .flat_map(|n| s.outgoing(n.id).map(move |l| (vi.c_dl(l), n.proc_delay)))
                    .collect(),
                C5Direction::Incoming => s
                    .nodes
                    .iter()
                    .flat_map(|n| s.incoming(n.id).map(move |l| (vi.c_dl(l), n.proc_delay)))
                    .collect(),
            };
            self.lp.add_le("C5_dl", terms, s.limits.delay_dl * s.total_rate_dl());
        }
    }

    fn add_interference_rows(&mut self) {
        let s = self.s;
        let vi = self.vi;
        for (k, &f) in s.spectrum.access_subchannels.iter().enumerate() {
            for node in &s.nodes {
                let limit = s.limits.i_th[node.id][k];
                if !limit.is_finite() {
                    continue;
                }
                let terms: Vec<(usize, f64)> = (0..s.num_links())
                    .filter(|&l| self.enabled[l][f])
                    .map(|l| (vi.x(l, f), s.gains.omega(l, node.id, f)))
                    .filter(|&(_, g)| g != 0.0)
                    .collect();
                if !terms.is_empty() {
                    self.lp.add_le(format!("C6_{}_{f}", node.id), terms, limit);
                }
            }
        }
    }

    /// Chord rows `C̃ - a_k s(X) + τ t(X) ≤ rhs_k` for every enabled pair.
    fn add_capacity_rows(&mut self) {
        let s = self.s;
        let (nl, nf, vi) = (s.num_links(), s.num_subchannels(), self.vi);
        let margin = self.opts.capacity_margin * s.spectrum.bandwidth;
        for l in 0..nl {
            for f in 0..nf {
                if !self.vi.has_binaries && !self.enabled[l][f] {
                    continue;
                }
                let e = self.approx.get(l, f);
                let tau = e.f2_tangent.slope;
                for (k, piece) in e.f1_pieces.iter().enumerate() {
                    let a = piece.slope;
                    let rhs = piece.intercept - e.f2_tangent.intercept + (a - tau) * e.noise - margin;
                    let mut terms = vec![(vi.c_tilde(l, f), 1.0)];
                    for o in (0..nl).filter(|&o| self.enabled[o][f]) {
                        let coeff = if o == l {
                            -a * s.gains.lambda[l][f]
                        } else {
                            (tau - a) * s.gains.gamma(l, o, f)
                        };
                        if coeff != 0.0 {
                            terms.push((vi.x(o, f), coeff));
                        }
                    }
                    let mut rhs_total = rhs;
                    if vi.has_binaries {
                        terms.push((vi.deficit(l, f), -1.0));
                        let relax = (-rhs).max(0.0);
                        if relax > 0.0 {
                            terms.push((vi.j_sub(f), relax));
                            rhs_total += relax;
                        }
                    }
                    let touches_s0 = e.breakpoints.get(k) == Some(&e.s0) || e.breakpoints.get(k + 1) == Some(&e.s0);
                    let tag = LazyTag {
                        group: l * nf + f,
                        seed: touches_s0 || e.f1_pieces.len() == 1,
                    };
                    self.lp.add_lazy_le(format!("C7cap_{l}_{f}_{k}"), terms, rhs_total, tag);
                }
            }
        }
    }

    fn add_flow_rows(&mut self) {
        let s = self.s;
        let (nl, nf, vi) = (s.num_links(), s.num_subchannels(), self.vi);
        for l in 0..nl {
            let wired = s.links[l].wired_capacity;
            let mut terms = vec![(vi.c_ul(l), 1.0), (vi.c_dl(l), 1.0)];
            terms.extend((0..nf).map(|f| (vi.c_tilde(l, f), -1.0)));
            self.lp.add_le(format!("C7_{l}"), terms, wired);
            if vi.has_binaries {
                for f in 0..nf {
                    let (ct, j) = (vi.c_tilde(l, f), vi.j_link(l));
                    let ubar = self.approx.get(l, f).capacity_bound;
                    let d = self.deficit(l, f);
                    let raw = self.raw_deficit(l, f);
                    self.lp
                        .add_le(format!("C7on_{l}_{f}"), vec![(ct, 1.0), (j, -ubar)], 0.0);
                    self.lp.add_le(format!("C7lo_{l}_{f}"), vec![(ct, -1.0), (j, -d)], 0.0);
                    self.lp
                        .add_le(format!("C7off_{l}_{f}"), vec![(vi.deficit(l, f), 1.0), (j, raw)], raw);
                }
            }
        }
        for node in s.non_roots() {
            let mut ul: Vec<(usize, f64)> = s.outgoing(node.id).map(|l| (vi.c_ul(l), 1.0)).collect();
            ul.extend(s.incoming(node.id).map(|l| (vi.c_ul(l), -1.0)));
            self.lp.add_eq(format!("C8_{}", node.id), ul, node.rate_ul);
            let mut dl: Vec<(usize, f64)> = s.incoming(node.id).map(|l| (vi.c_dl(l), 1.0)).collect();
            dl.extend(s.outgoing(node.id).map(|l| (vi.c_dl(l), -1.0)));
            self.lp.add_eq(format!("C9_{}", node.id), dl, node.rate_dl);
        }
        let mut ul = Vec::new();
        let mut dl = Vec::new();
        for root in s.roots() {
            ul.extend(s.incoming(root.id).map(|l| (vi.c_ul(l), 1.0)));
            ul.extend(s.outgoing(root.id).map(|l| (vi.c_ul(l), -1.0)));
            dl.extend(s.outgoing(root.id).map(|l| (vi.c_dl(l), 1.0)));
            dl.extend(s.incoming(root.id).map(|l| (vi.c_dl(l), -1.0)));
        }
        if !ul.is_empty() || s.total_rate_ul() != 0.0 {
            self.lp.add_eq("C10", ul, s.total_rate_ul());
        }
        if !dl.is_empty() || s.total_rate_dl() != 0.0 {
            self.lp.add_eq("C11", dl, s.total_rate_dl());
        }
    }
}

/// Builds the planning MILP: minimum network cost over powers, flows, link and
/// subchannel activations.
pub fn build_milp(
    s: &Scenario,
    approx: &CapacityApprox,
    opts: &FormulationOptions,
) -> Result<(LinearProgram, VarIndex)> {
    check_dims(s, approx)?;
    let (nl, nf) = (s.num_links(), s.num_subchannels());
    let vi = VarIndex::new(nl, nf, true);
    let mut b = Builder {
        s,
        approx,
        vi,
        opts: *opts,
        enabled: vec![vec![true; nf]; nl],
        lp: LinearProgram::default(),
    };
    b.add_variables(s.costs.w_power);
    for l in 0..nl {
        let j = b.lp.add_binary(format!("jl_{l}"), s.costs.w_link);
        debug_assert_eq!(j, vi.j_link(l));
    }
    for f in 0..nf {
        let cost = if s.spectrum.is_access(f) {
            0.0
        } else {
            s.costs.w_spectrum
        };
        let j = b.lp.add_binary(format!("jf_{f}"), cost);
        debug_assert_eq!(j, vi.j_sub(f));
    }
    for l in 0..nl {
        for f in 0..nf {
            let j = b.lp.add_var(format!("v_{l}_{f}"), 0.0, b.raw_deficit(l, f), 0.0);
            debug_assert_eq!(j, vi.deficit(l, f));
        }
    }
    let p_tilde = s.total_power_bound();
    for l in 0..nl {
        let mut terms: Vec<(usize, f64)> = (0..nf).map(|f| (vi.x(l, f), 1.0)).collect();
        terms.push((vi.j_link(l), -p_tilde));
        b.lp.add_le(format!("C1_{l}"), terms, 0.0);
    }
    for f in 0..nf {
        let mut terms: Vec<(usize, f64)> = (0..nl).map(|l| (vi.x(l, f), 1.0)).collect();
        terms.push((vi.j_sub(f), -p_tilde));
        b.lp.add_le(format!("C2_{f}"), terms, 0.0);
    }
    b.add_power_rows();
    b.add_delay_rows();
    b.add_interference_rows();
    b.add_capacity_rows();
    b.add_flow_rows();
    debug_assert_eq!(b.lp.num_vars(), vi.total());
    Ok((b.lp, vi))
}

/// Builds the re-tuning LP: minimum total power on a fixed set of links and
/// subchannels.
pub fn build_retune_lp(
    s: &Scenario,
    fixed_links: &BTreeSet<LinkId>,
    fixed_subchannels: &BTreeSet<usize>,
    approx: &CapacityApprox,
    opts: &FormulationOptions,
) -> Result<(LinearProgram, VarIndex)> {
    check_dims(s, approx)?;
    let (nl, nf) = (s.num_links(), s.num_subchannels());
    if let Some(&l) = fixed_links.iter().find(|&&l| l >= nl) {
        return Err(Error::IndexOutOfRange(format!("fixed link {l} (scenario has {nl})")));
    }
    if let Some(&f) = fixed_subchannels.iter().find(|&&f| f >= nf) {
        return Err(Error::IndexOutOfRange(format!(
            "fixed subchannel {f} (scenario has {nf})"
        )));
    }
    let enabled = (0..nl)
        .map(|l| {
            (0..nf)
                .map(|f| fixed_links.contains(&l) && fixed_subchannels.contains(&f))
                .collect()
        })
        .collect();
    let vi = VarIndex::new(nl, nf, false);
    let mut b = Builder {
        s,
        approx,
        vi,
        opts: *opts,
        enabled,
        lp: LinearProgram::default(),
    };
    b.add_variables(1.0);
    b.add_power_rows();
    b.add_delay_rows();
    b.add_interference_rows();
    b.add_capacity_rows();
    b.add_flow_rows();
    Ok((b.lp, vi))
}

/// Maps a solver vector to a plan.
///
/// Binaries must lie within `int_tol` of 0 or 1. Powers of deactivated links
/// or subchannels are zeroed, and a cost-free subchannel carrying no power is
/// reported inactive. Exact capacities and cost are recomputed; `feasible` is
/// left `false` for the caller to establish.
pub fn extract_plan(s: &Scenario, vi: &VarIndex, x: &[f64], int_tol: f64) -> Result<Plan> {
    if x.len() != vi.total() || vi.num_links != s.num_links() {
        return Err(Error::DimensionMismatch(format!(
            "solution has {} entries, layout expects {}",
            x.len(),
            vi.total()
        )));
    }
    let (nl, nf) = (vi.num_links, vi.num_subchannels);
    let binary = |j: usize| -> Result<bool> {
        let v = x[j];
        if (v - v.round()).abs() > int_tol || !(-int_tol..=1.0 + int_tol).contains(&v) {
            return Err(Error::NonIntegral {
                var: j,
                value: v,
                tol: int_tol,
            });
        }
        Ok(v.round() == 1.0)
    };
    let mut plan = Plan::empty(s);
    let (link_on, sub_on): (Vec<bool>, Vec<bool>) = if vi.has_binaries {
        (
            (0..nl).map(|l| binary(vi.j_link(l))).collect::<Result<_>>()?,
            (0..nf).map(|f| binary(vi.j_sub(f))).collect::<Result<_>>()?,
        )
    } else {
        (vec![true; nl], vec![true; nf])
    };
    for l in 0..nl {
        for f in 0..nf {
            let v = if link_on[l] && sub_on[f] {
                x[vi.x(l, f)].max(0.0)
            } else {
                0.0
            };
            plan.powers.set(l, f, v);
        }
        plan.flow_ul[l] = x[vi.c_ul(l)].max(0.0);
        plan.flow_dl[l] = x[vi.c_dl(l)].max(0.0);
    }
    if vi.has_binaries {
        plan.active_links = (0..nl).filter(|&l| link_on[l]).collect();
        plan.active_subchannels = (0..nf)
            .filter(|&f| sub_on[f])
            .filter(|&f| !(s.spectrum.is_access(f) && plan.powers.subchannel_total(f) == 0.0))
            .collect();
    }
    plan.refresh(s)?;
    Ok(plan)
}

/// Re-routes UL/DL flows for fixed powers through the exact capacities
/// (slightly shrunk), keeping every flow and delay row satisfied. Returns
/// `None` when no such routing exists.
///
/// The planning LP certifies flows against the linearized capacities up to
/// simplex tolerance; this small, well-conditioned LP removes that residue.
pub fn route_flows(
    s: &Scenario,
    powers: &PowerVector,
    active_links: &BTreeSet<LinkId>,
    opts: &FormulationOptions,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    const SHRINK: f64 = 1e-10;
    let nl = s.num_links();
    let caps = crate::model::capacity_matrix(s, powers)?;
    let mut lp = LinearProgram::default();
    for l in 0..nl {
        lp.add_var(format!("cul_{l}"), 0.0, s.total_rate_ul(), 1.0);
    }
    for l in 0..nl {
        lp.add_var(format!("cdl_{l}"), 0.0, s.total_rate_dl(), 1.0);
    }
    for (l, row) in caps.iter().enumerate().take(nl) {
        let wireless: f64 = if active_links.contains(&l) {
            row.iter().sum()
        } else {
            0.0
        };
        let cap = (s.links[l].wired_capacity + wireless) * (1.0 - SHRINK);
        lp.add_le(format!("C7_{l}"), vec![(l, 1.0), (nl + l, 1.0)], cap);
    }
    let ul = |l: usize| l;
    let dl = |l: usize| nl + l;
    if s.limits.delay_ul.is_finite() {
        let terms = s
            .nodes
            .iter()
            .flat_map(|n| s.outgoing(n.id).map(move |l| (ul(l), n.proc_delay)))
            .collect();
        lp.add_le("C5_ul", terms, s.limits.delay_ul * s.total_rate_ul() * (1.0 - SHRINK));
    }
    if s.limits.delay_dl.is_finite() {
        let terms: Vec<(usize, f64)> = s
            .nodes
            .iter()
            .flat_map(|n| {
                let links: Vec<LinkId> = match opts.c5_dl_direction {
                    C5Direction::AsPrinted => s.outgoing(n.id).collect(),
                    C5Direction::Incoming => s.incoming(n.id).collect(),
                };
                links.into_iter().map(move |l| (dl(l), n.proc_delay))
            })
            .collect();
        lp.add_le("C5_dl", terms, s.limits.delay_dl * s.total_rate_dl() * (1.0 - SHRINK));
    }
    for node in s.non_roots() {
        let mut u: Vec<(usize, f64)> = s.outgoing(node.id).map(|l| (ul(l), 1.0)).collect();
        u.extend(s.incoming(node.id).map(|l| (ul(l), -1.0)));
        lp.add_eq(format!("C8_{}", node.id), u, node.rate_ul);
        let mut d: Vec<(usize, f64)> = s.incoming(node.id).map(|l| (dl(l), 1.0)).collect();
        d.extend(s.outgoing(node.id).map(|l| (dl(l), -1.0)));
        lp.add_eq(format!("C9_{}", node.id), d, node.rate_dl);
    }
    let sol = solve_lp(&lp, &SolverOptions::default());
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let flow_ul = sol.x[..nl].iter().map(|v| v.max(0.0)).collect();
    let flow_dl = sol.x[nl..].iter().map(|v| v.max(0.0)).collect();
    Ok(Some((flow_ul, flow_dl)))
}
