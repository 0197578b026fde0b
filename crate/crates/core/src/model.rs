//! Physical-layer network model: nodes, links, spectrum, channel gains and the
//! exact SINR / capacity / cost evaluations every plan is checked against.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type LinkId = usize;

/// Default thermal noise density in W/Hz (about -174 dBm/Hz).
pub const DEFAULT_NOISE_DENSITY: f64 = 4e-21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    NonRoot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Position in meters.
    pub position: [f64; 3],
    /// Average processing delay in seconds.
    pub proc_delay: f64,
    /// Total transmit power budget of the node in watts.
    pub power_budget: f64,
    /// Uplink demand in bits/s.
    pub rate_ul: f64,
    /// Downlink demand in bits/s.
    pub rate_dl: f64,
}

impl Node {
    pub fn is_root(&self) -> bool {
        self.kind == NodeKind::Root
    }
}

/// A directed candidate link.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    /// Per-link transmit power cap in watts.
    pub p_max: f64,
    /// Pre-existing wired capacity in bits/s.
    pub wired_capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub num_subchannels: usize,
    /// Bandwidth of one subchannel in Hz.
    pub bandwidth: f64,
    /// Subchannels shared with the access network.
    pub access_subchannels: Vec<usize>,
    /// Noise power in watts, indexed `[link][subchannel]`.
    pub noise_power: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn is_access(&self, f: usize) -> bool {
        self.access_subchannels.contains(&f)
    }
}

/// Linear channel power gains.
///
/// `gamma` is stored densely as `[victim][aggressor][subchannel]`; entries whose
/// aggressor transmits from the victim's receiving node hold the residual
/// self-interference after cancellation. `omega` is `[link][node][subchannel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    num_links: usize,
    num_nodes: usize,
    num_subchannels: usize,
    pub lambda: Vec<Vec<f64>>,
    gamma: Vec<f64>,
    omega: Vec<f64>,
}

impl Gains {
    /// All-zero gains of the given dimensions.
    pub fn zeros(num_links: usize, num_nodes: usize, num_subchannels: usize) -> Self {
        Self {
            num_links,
            num_nodes,
            num_subchannels,
            lambda: vec![vec![0.0; num_subchannels]; num_links],
            gamma: vec![0.0; num_links * num_links * num_subchannels],
            omega: vec![0.0; num_links * num_nodes * num_subchannels],
        }
    }

    pub fn num_links(&self) -> usize {
        self.num_links
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    #[inline]
    pub fn gamma(&self, victim: LinkId, aggressor: LinkId, f: usize) -> f64 {
        self.gamma[(victim * self.num_links + aggressor) * self.num_subchannels + f]
    }

    pub fn set_gamma(&mut self, victim: LinkId, aggressor: LinkId, f: usize, value: f64) {
        self.gamma[(victim * self.num_links + aggressor) * self.num_subchannels + f] = value;
    }

    #[inline]
    pub fn omega(&self, link: LinkId, node: NodeId, f: usize) -> f64 {
        self.omega[(link * self.num_nodes + node) * self.num_subchannels + f]
    }

    pub fn set_omega(&mut self, link: LinkId, node: NodeId, f: usize, value: f64) {
        self.omega[(link * self.num_nodes + node) * self.num_subchannels + f] = value;
    }

    /// Coefficient of aggressor power in the receive aggregate of `victim`.
    /// The diagonal is the desired gain, so the full aggregate minus the
    /// interference aggregate is exactly the received signal.
    #[inline]
    pub fn aggregate_coeff(&self, victim: LinkId, aggressor: LinkId, f: usize) -> f64 {
        if victim == aggressor {
            self.lambda[victim][f]
        } else {
            self.gamma(victim, aggressor, f)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Cost per watt of transmit power.
    pub w_power: f64,
    /// Cost per established wireless link.
    pub w_link: f64,
    /// Cost per backhaul-exclusive subchannel in use.
    pub w_spectrum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limits {
    /// Interference temperature threshold in watts, `[node][k]` where `k` is
    /// the position of the subchannel within `Spectrum::access_subchannels`.
    pub i_th: Vec<Vec<f64>>,
    pub delay_ul: f64,
    pub delay_dl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub spectrum: Spectrum,
    pub gains: Gains,
    pub costs: CostWeights,
    pub limits: Limits,
}

impl Scenario {
    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.spectrum.num_subchannels
    }

    pub fn roots(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_root())
    }

    pub fn non_roots(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| !n.is_root())
    }

    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = LinkId> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.from == node)
            .map(|(i, _)| i)
    }

    pub fn incoming(&self, node: NodeId) -> impl Iterator<Item = LinkId> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.to == node)
            .map(|(i, _)| i)
    }

    pub fn total_rate_ul(&self) -> f64 {
        self.non_roots().map(|n| n.rate_ul).sum()
    }

    pub fn total_rate_dl(&self) -> f64 {
        self.non_roots().map(|n| n.rate_dl).sum()
    }

    /// Big-M bound on total network power: the sum of all node budgets.
    pub fn total_power_bound(&self) -> f64 {
        self.nodes.iter().map(|n| n.power_budget).sum()
    }

    /// Largest power any single `(link, subchannel)` variable can take.
    pub fn power_cap(&self, link: LinkId) -> f64 {
        let l = &self.links[link];
        l.p_max.min(self.nodes[l.from].power_budget)
    }

    pub fn link_id(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.links.iter().position(|l| l.from == from && l.to == to)
    }

    fn check_index(&self, link: LinkId, f: usize) -> Result<()> {
        if link >= self.links.len() {
            return Err(Error::IndexOutOfRange(format!("link {link}")));
        }
        if f >= self.spectrum.num_subchannels {
            return Err(Error::IndexOutOfRange(format!("subchannel {f}")));
        }
        Ok(())
    }
}

/// Transmit powers `X[link][subchannel]` in watts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerVector {
    num_subchannels: usize,
    values: Vec<f64>,
}

impl PowerVector {
    pub fn zeros(num_links: usize, num_subchannels: usize) -> Self {
        // A vector without links carries no subchannel dimension, so it
        // compares equal to one rebuilt from an empty row list.
        let num_subchannels = if num_links == 0 { 0 } else { num_subchannels };
        Self {
            num_subchannels,
            values: vec![0.0; num_links * num_subchannels],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_subchannels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_subchannels) {
            return Err(Error::DimensionMismatch("ragged power matrix".into()));
        }
        Ok(Self {
            num_subchannels,
            values: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        if self.num_subchannels == 0 {
            return Vec::new();
        }
        self.values.chunks(self.num_subchannels).map(<[f64]>::to_vec).collect()
    }

    pub fn num_links(&self) -> usize {
        self.values.len().checked_div(self.num_subchannels).unwrap_or(0)
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    #[inline]
    pub fn get(&self, link: LinkId, f: usize) -> f64 {
        self.values[link * self.num_subchannels + f]
    }

    #[inline]
    pub fn set(&mut self, link: LinkId, f: usize, value: f64) {
        self.values[link * self.num_subchannels + f] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn link_total(&self, link: LinkId) -> f64 {
        let start = link * self.num_subchannels;
        self.values[start..start + self.num_subchannels].iter().sum()
    }

    pub fn subchannel_total(&self, f: usize) -> f64 {
        (0..self.num_links()).map(|l| self.get(l, f)).sum()
    }

    pub fn max_abs_diff(&self, other: &PowerVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn matches(&self, s: &Scenario) -> bool {
        self.num_links() == s.num_links() && (self.num_subchannels == s.num_subchannels() || s.num_links() == 0)
    }
}

/// Interference-plus-noise power seen by `link` on subchannel `f`.
pub fn interference_plus_noise(s: &Scenario, p: &PowerVector, link: LinkId, f: usize) -> f64 {
    let interference: f64 = (0..s.num_links())
        .filter(|&other| other != link)
        .map(|other| s.gains.gamma(link, other, f) * p.get(other, f))
        .sum();
    interference + s.spectrum.noise_power[link][f]
}

pub fn sinr(s: &Scenario, p: &PowerVector, link: LinkId, f: usize) -> Result<f64> {
    s.check_index(link, f)?;
    if !p.matches(s) {
        return Err(Error::DimensionMismatch("power vector vs scenario".into()));
    }
    let signal = s.gains.lambda[link][f] * p.get(link, f);
    Ok(signal / interference_plus_noise(s, p, link, f))
}

/// Achievable rate `B log2(1 + SINR)` in bits/s.
pub fn link_capacity(s: &Scenario, p: &PowerVector, link: LinkId, f: usize) -> Result<f64> {
    Ok(s.spectrum.bandwidth * (1.0 + sinr(s, p, link, f)?).log2())
}

/// Capacity matrix `[link][subchannel]` for a full power vector.
pub fn capacity_matrix(s: &Scenario, p: &PowerVector) -> Result<Vec<Vec<f64>>> {
    (0..s.num_links())
        .map(|l| (0..s.num_subchannels()).map(|f| link_capacity(s, p, l, f)).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub power: f64,
    pub link: f64,
    pub spectrum: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn evaluate(
        costs: &CostWeights,
        spectrum: &Spectrum,
        total_power: f64,
        active_links: &BTreeSet<LinkId>,
        active_subchannels: &BTreeSet<usize>,
    ) -> Self {
        let power = costs.w_power * total_power;
        let link = costs.w_link * active_links.len() as f64;
        let exclusive = active_subchannels.iter().filter(|&&f| !spectrum.is_access(f)).count();
        let spectrum = costs.w_spectrum * exclusive as f64;
        Self {
            power,
            link,
            spectrum,
            total: power + link + spectrum,
        }
    }
}

/// One outer iteration of the planner or re-tuner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Network cost (planner) or total power (re-tuner) of this iterate.
    pub objective: f64,
    pub status: String,
    pub max_power_change: f64,
    #[serde(default)]
    pub bnb_nodes: usize,
    #[serde(default)]
    pub gap: f64,
    #[serde(default)]
    pub lp_iterations: usize,
    #[serde(default = "default_true")]
    pub feasible: bool,
}

fn default_true() -> bool {
    true
}

pub type IterationTrace = Vec<IterationRecord>;

/// A complete decision-variable assignment with its exact evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    pub powers: PowerVector,
    pub flow_ul: Vec<f64>,
    pub flow_dl: Vec<f64>,
    pub active_links: BTreeSet<LinkId>,
    pub active_subchannels: BTreeSet<usize>,
    pub exact_capacities: Vec<Vec<f64>>,
    pub cost: CostBreakdown,
    pub feasible: bool,
    pub trace: IterationTrace,
}

impl Plan {
    /// A plan with nothing switched on.
    pub fn empty(s: &Scenario) -> Self {
        let l = s.num_links();
        let f = s.num_subchannels();
        Self {
            powers: PowerVector::zeros(l, f),
            flow_ul: vec![0.0; l],
            flow_dl: vec![0.0; l],
            active_links: BTreeSet::new(),
            active_subchannels: BTreeSet::new(),
            exact_capacities: vec![vec![0.0; f]; l],
            cost: CostBreakdown::default(),
            feasible: false,
            trace: Vec::new(),
        }
    }

    /// Recomputes exact capacities and the cost breakdown from the decision
    /// variables.
    pub fn refresh(&mut self, s: &Scenario) -> Result<()> {
        self.exact_capacities = capacity_matrix(s, &self.powers)?;
        self.cost = network_cost(s, self)?;
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.powers.total()
    }

    /// Checks that the plan's dimensions and ids fit the scenario.
    pub fn check_against(&self, s: &Scenario) -> Result<()> {
        if !self.powers.matches(s) {
            return Err(Error::DimensionMismatch(format!(
                "plan has {} links x {} subchannels, scenario has {} x {}",
                self.powers.num_links(),
                self.powers.num_subchannels(),
                s.num_links(),
                s.num_subchannels()
            )));
        }
        if self.flow_ul.len() != s.num_links() || self.flow_dl.len() != s.num_links() {
            return Err(Error::DimensionMismatch("flow vectors".into()));
        }
        if let Some(&l) = self.active_links.iter().find(|&&l| l >= s.num_links()) {
            return Err(Error::DimensionMismatch(format!(
                "plan activates link {l} which the scenario does not have"
            )));
        }
        if let Some(&f) = self.active_subchannels.iter().find(|&&f| f >= s.num_subchannels()) {
            return Err(Error::DimensionMismatch(format!(
                "plan activates subchannel {f} which the scenario does not have"
            )));
        }
        Ok(())
    }
}

/// Weighted power, link and spectrum cost. Only backhaul-exclusive subchannels
/// carry a spectrum price.
pub fn network_cost(s: &Scenario, plan: &Plan) -> Result<CostBreakdown> {
    plan.check_against(s)?;
    Ok(CostBreakdown::evaluate(
        &s.costs,
        &s.spectrum,
        plan.powers.total(),
        &plan.active_links,
        &plan.active_subchannels,
    ))
}

/// Ordered `(aggressor, victim)` link pairs where the aggressor's transmitter
/// is the victim's receiver, i.e. pairs coupled by residual self-interference.
pub fn self_interference_pairs(s: &Scenario) -> Vec<(LinkId, LinkId)> {
    let mut pairs = Vec::new();
    for (a, aggressor) in s.links.iter().enumerate() {
        for (v, victim) in s.links.iter().enumerate() {
            if a != v && victim.to == aggressor.from {
                pairs.push((a, v));
            }
        }
    }
    pairs
}

/// A broken scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = s.nodes.len();
    let l = s.links.len();
    let nf = s.spectrum.num_subchannels;

    if !s.nodes.iter().any(Node::is_root) {
        out.push(Violation::new("nodes", "at least one root node is required"));
    }
    for (i, node) in s.nodes.iter().enumerate() {
        let at = |name: &str| format!("nodes[{i}].{name}");
        if node.id != i {
            out.push(Violation::new(at("id"), "node ids must equal their list position"));
        }
        if !(node.proc_delay >= 0.0) {
            out.push(Violation::new(at("proc_delay"), "must be >= 0"));
        }
        if !(node.power_budget > 0.0) || !node.power_budget.is_finite() {
            out.push(Violation::new(at("power_budget"), "must be > 0"));
        }
        if !(node.rate_ul >= 0.0) {
            out.push(Violation::new(at("rate_ul"), "must be >= 0"));
        }
        if !(node.rate_dl >= 0.0) {
            out.push(Violation::new(at("rate_dl"), "must be >= 0"));
        }
        if node.is_root() && (node.rate_ul != 0.0 || node.rate_dl != 0.0) {
            out.push(Violation::new(at("rate"), "root nodes carry no demand"));
        }
        if node.position.iter().any(|c| !c.is_finite()) {
            out.push(Violation::new(at("position"), "must be finite"));
        }
    }

    for (k, link) in s.links.iter().enumerate() {
        let at = |name: &str| format!("links[{k}].{name}");
        if link.from >= n {
            out.push(Violation::new(at("from"), "unknown node"));
        }
        if link.to >= n {
            out.push(Violation::new(at("to"), "unknown node"));
        }
        if link.from == link.to {
            out.push(Violation::new(at("to"), "self loops are not allowed"));
        }
        if !(link.p_max > 0.0) || !link.p_max.is_finite() {
            out.push(Violation::new(at("p_max"), "must be > 0"));
        }
        if !(link.wired_capacity >= 0.0) || !link.wired_capacity.is_finite() {
            out.push(Violation::new(at("wired_capacity"), "must be >= 0"));
        }
        if s.links[..k].iter().any(|o| o.from == link.from && o.to == link.to) {
            out.push(Violation::new(at("to"), "duplicate directed link"));
        }
    }

    if !(s.spectrum.bandwidth > 0.0) || !s.spectrum.bandwidth.is_finite() {
        out.push(Violation::new("spectrum.bandwidth", "must be > 0"));
    }
    for (k, &f) in s.spectrum.access_subchannels.iter().enumerate() {
        if f >= nf {
            out.push(Violation::new(
                format!("spectrum.access_subchannels[{k}]"),
                "subchannel index out of range",
            ));
        }
    }
    if s.spectrum.noise_power.len() != l || s.spectrum.noise_power.iter().any(|r| r.len() != nf) {
        out.push(Violation::new("spectrum.noise_power", "must be links x subchannels"));
    } else {
        for (i, row) in s.spectrum.noise_power.iter().enumerate() {
            for (f, &w) in row.iter().enumerate() {
                if !(w > 0.0) || !w.is_finite() {
                    out.push(Violation::new(format!("spectrum.noise_power[{i}][{f}]"), "must be > 0"));
                }
            }
        }
    }

    let g = &s.gains;
    if g.num_links != l || g.num_nodes != n || g.num_subchannels != nf {
        out.push(Violation::new(
            "gains",
            "dimensions must match links, nodes and subchannels",
        ));
    } else if g.lambda.len() != l || g.lambda.iter().any(|r| r.len() != nf) {
        out.push(Violation::new("gains.lambda", "must be links x subchannels"));
    } else {
        for (i, row) in g.lambda.iter().enumerate() {
            for (f, &v) in row.iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    out.push(Violation::new(format!("gains.lambda[{i}][{f}]"), "must be > 0"));
                }
            }
        }
        for v in 0..l {
            for a in 0..l {
                for f in 0..nf {
                    let x = g.gamma(v, a, f);
                    if !(x >= 0.0) || !x.is_finite() {
                        out.push(Violation::new(format!("gains.gamma[{v}][{a}][{f}]"), "must be >= 0"));
                    }
                }
            }
            for m in 0..n {
                for f in 0..nf {
                    let x = g.omega(v, m, f);
                    if !(x >= 0.0) || !x.is_finite() {
                        out.push(Violation::new(format!("gains.omega[{v}][{m}][{f}]"), "must be >= 0"));
                    }
                }
            }
        }
    }

    let c = &s.costs;
    for (name, v) in [
        ("costs.w_power", c.w_power),
        ("costs.w_link", c.w_link),
        ("costs.w_spectrum", c.w_spectrum),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            out.push(Violation::new(name, "must be >= 0"));
        }
    }

    let lim = &s.limits;
    let na = s.spectrum.access_subchannels.len();
    if lim.i_th.len() != n || lim.i_th.iter().any(|r| r.len() != na) {
        out.push(Violation::new("limits.i_th", "must be nodes x access subchannels"));
    } else {
        for (m, row) in lim.i_th.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !(v > 0.0) {
                    out.push(Violation::new(format!("limits.i_th[{m}][{k}]"), "must be > 0"));
                }
            }
        }
    }
    if !(lim.delay_ul > 0.0) {
        out.push(Violation::new("limits.delay_ul", "must be > 0"));
    }
    if !(lim.delay_dl > 0.0) {
        out.push(Violation::new("limits.delay_dl", "must be > 0"));
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// One root, one non-root, both link directions, `nf` subchannels,
    /// no interference.
    pub(crate) fn two_node(nf: usize) -> Scenario {
        let nodes = vec![
            Node {
                id: 0,
                kind: NodeKind::Root,
                position: [0.0; 3],
                proc_delay: 1e-3,
                power_budget: 1.0,
                rate_ul: 0.0,
                rate_dl: 0.0,
            },
            Node {
                id: 1,
                kind: NodeKind::NonRoot,
                position: [100.0, 0.0, 0.0],
                proc_delay: 1e-3,
                power_budget: 1.0,
                rate_ul: 2e7,
                rate_dl: 0.0,
            },
        ];
        let links = vec![
            Link {
                from: 1,
                to: 0,
                p_max: 1.0,
                wired_capacity: 0.0,
            },
            Link {
                from: 0,
                to: 1,
                p_max: 1.0,
                wired_capacity: 0.0,
            },
        ];
        let mut gains = Gains::zeros(2, 2, nf);
        for row in &mut gains.lambda {
            row.fill(1e-6);
        }
        Scenario {
            nodes,
            links,
            spectrum: Spectrum {
                num_subchannels: nf,
                bandwidth: 1e7,
                access_subchannels: vec![],
                noise_power: vec![vec![1e-10; nf]; 2],
            },
            gains,
            costs: CostWeights {
                w_power: 1.0,
                w_link: 1.0,
                w_spectrum: 1.0,
            },
            limits: Limits {
                i_th: vec![vec![]; 2],
                delay_ul: 1e-2,
                delay_dl: 1e-2,
            },
        }
    }

    #[test]
    fn well_formed_scenario_has_no_violations() {
        assert!(validate_scenario(&two_node(2)).is_empty());
    }

    #[test]
    fn zero_noise_is_reported() {
        let mut s = two_node(1);
        s.spectrum.noise_power[0][0] = 0.0;
        let v = validate_scenario(&s);
        assert_eq!(v, vec![Violation::new("spectrum.noise_power[0][0]", "must be > 0")]);
    }

    #[test]
    fn missing_root_is_reported() {
        let mut s = two_node(1);
        s.nodes[0].kind = NodeKind::NonRoot;
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "nodes");
    }

    #[test]
    fn sinr_examples() {
        let mut s = two_node(1);
        s.gains.lambda[0][0] = 1e-7;
        let mut p = PowerVector::zeros(2, 1);
        p.set(0, 0, 0.5);
        assert!((sinr(&s, &p, 0, 0).unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(sinr(&s, &p, 1, 0).unwrap(), 0.0);

        s.gains.set_gamma(0, 1, 0, 1e-9);
        p.set(1, 0, 1.0);
        // 5e-8 / (1e-9 + 1e-10)
        let expected = 5e-8 / 1.1e-9;
        assert!((sinr(&s, &p, 0, 0).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 45.4545).abs() < 1e-4);
        assert!(sinr(&s, &p, 2, 0).is_err());
        assert!(sinr(&s, &p, 0, 1).is_err());
    }

    #[test]
    fn capacity_examples() {
        let mut s = two_node(1);
        s.spectrum.bandwidth = 20e6;
        let mut p = PowerVector::zeros(2, 1);
        // gamma = 3 with lambda 1e-6, noise 1e-10
        p.set(0, 0, 3e-4);
        assert!((link_capacity(&s, &p, 0, 0).unwrap() - 40e6).abs() < 1e-3);
        s.spectrum.bandwidth = 10e6;
        p.set(0, 0, 1e-4);
        assert!((link_capacity(&s, &p, 0, 0).unwrap() - 10e6).abs() < 1e-3);
        assert_eq!(link_capacity(&s, &p, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn cost_examples() {
        let mut s = two_node(2);
        s.costs = CostWeights {
            w_power: 1.0,
            w_link: 10.0,
            w_spectrum: 100.0,
        };
        let mut plan = Plan::empty(&s);
        assert_eq!(network_cost(&s, &plan).unwrap().total, 0.0);

        plan.powers.set(0, 0, 0.2);
        plan.powers.set(1, 0, 0.1);
        plan.active_links = [0, 1].into();
        plan.active_subchannels = [0].into();
        assert!((network_cost(&s, &plan).unwrap().total - 120.3).abs() < 1e-12);

        s.spectrum.access_subchannels = vec![0];
        assert!((network_cost(&s, &plan).unwrap().total - 20.3).abs() < 1e-12);
    }

    fn with_links(pairs: &[(usize, usize)]) -> Scenario {
        let mut s = two_node(1);
        let n = pairs.iter().map(|&(a, b)| a.max(b)).max().unwrap() + 1;
        s.nodes = (0..n)
            .map(|i| Node {
                id: i,
                ..s.nodes[1].clone()
            })
            .collect();
        s.links = pairs
            .iter()
            .map(|&(from, to)| Link {
                from,
                to,
                p_max: 1.0,
                wired_capacity: 0.0,
            })
            .collect();
        s
    }

    #[test]
    fn self_interference_pair_examples() {
        let s = with_links(&[(1, 2), (2, 1)]);
        assert_eq!(self_interference_pairs(&s), vec![(0, 1), (1, 0)]);
        let s = with_links(&[(1, 2), (3, 4)]);
        assert!(self_interference_pairs(&s).is_empty());
        let s = with_links(&[(1, 2), (3, 1)]);
        assert_eq!(self_interference_pairs(&s), vec![(0, 1)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn interfered(lambda: f64, gamma: f64, noise: f64) -> Scenario {
            let mut s = two_node(1);
            s.gains.lambda[0][0] = lambda;
            s.gains.set_gamma(0, 1, 0, gamma);
            s.spectrum.noise_power[0][0] = noise;
            s
        }

        proptest! {
            #[test]
            fn sinr_is_scale_free(
                x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, c in 1e-3f64..1e3,
                lambda in 1e-9f64..1e-5, gamma in 0.0f64..1e-6, noise in 1e-12f64..1e-9,
            ) {
                let s = interfered(lambda, gamma, noise);
                let scaled = interfered(lambda, gamma, noise * c);
                let p = PowerVector::from_rows(&[vec![x0], vec![x1]]).unwrap();
                let q = PowerVector::from_rows(&[vec![x0 * c], vec![x1 * c]]).unwrap();
                let a = sinr(&s, &p, 0, 0).unwrap();
                let b = sinr(&scaled, &q, 0, 0).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }

            #[test]
            fn capacity_monotone_in_own_and_interferer_power(
                x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, dx in 0.0f64..1.0,
                gamma in 0.0f64..1e-6,
            ) {
                let s = interfered(1e-6, gamma, 1e-10);
                let base = PowerVector::from_rows(&[vec![x0], vec![x1]]).unwrap();
                let more_own = PowerVector::from_rows(&[vec![x0 + dx], vec![x1]]).unwrap();
                let more_int = PowerVector::from_rows(&[vec![x0], vec![x1 + dx]]).unwrap();
                let c = link_capacity(&s, &base, 0, 0).unwrap();
                prop_assert!(link_capacity(&s, &more_own, 0, 0).unwrap() >= c - 1e-9);
                prop_assert!(link_capacity(&s, &more_int, 0, 0).unwrap() <= c + 1e-9);
            }

            #[test]
            fn cost_monotone(x in 0.0f64..1.0, dx in 0.0f64..1.0, link_on: bool, sub_on: bool) {
                let s = two_node(2);
                let mut plan = Plan::empty(&s);
                plan.powers.set(0, 1, x);
                let base = network_cost(&s, &plan).unwrap().total;
                plan.powers.set(0, 1, x + dx);
                if link_on { plan.active_links.insert(0); }
                if sub_on { plan.active_subchannels.insert(1); }
                prop_assert!(network_cost(&s, &plan).unwrap().total >= base);
            }

            #[test]
            fn self_interference_pairs_permutation_invariant(
                raw in proptest::collection::vec((0usize..5, 0usize..5), 1..8),
                seed in any::<u64>(),
            ) {
                let mut pairs: Vec<(usize, usize)> = raw.into_iter().filter(|(a, b)| a != b).collect();
                pairs.sort();
                pairs.dedup();
                prop_assume!(!pairs.is_empty());
                let s = with_links(&pairs);
                let mut shuffled = pairs.clone();
                let k = (seed as usize) % shuffled.len();
                shuffled.rotate_left(k);
                shuffled.reverse();
                let t = with_links(&shuffled);
                let key = |sc: &Scenario, v: Vec<(usize, usize)>| {
                    let mut out: Vec<_> = v
                        .into_iter()
                        .map(|(a, b)| {
                            let (la, lb) = (&sc.links[a], &sc.links[b]);
                            ((la.from, la.to), (lb.from, lb.to))
                        })
                        .collect();
                    out.sort();
                    out
                };
                prop_assert_eq!(
                    key(&s, self_interference_pairs(&s)),
                    key(&t, self_interference_pairs(&t))
                );
            }
        }
    }
}
