//! Scenario and plan documents, and the synthetic scenario generator.
//!
//! Documents are JSON with unit suffixes in field names. Gains may be written
//! as linear numbers or as strings such as `"-110 dB"`; thresholds and delay
//! bounds written as `null` (or omitted) mean "unconstrained".

use log::warn;
use rand_core::Rng;
use rand_pcg::Pcg64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    validate_scenario, CostBreakdown, CostWeights, Gains, IterationTrace, Limits, Link, LinkId, Node, NodeKind, Plan,
    PowerVector, Scenario, Spectrum, DEFAULT_NOISE_DENSITY,
};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Stream constant used with the seed to initialise the generator's PCG64.
pub const PCG_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut start = 0;
    for _ in 1..line {
        match bytes[start..].iter().position(|&b| b == b'\n') {
            Some(k) => start += k + 1,
            None => break,
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len())
}

fn json_error(bytes: &[u8], e: serde_json::Error, path: String) -> Error {
    use serde_json::error::Category;
    let text = e.to_string();
    let message = match text.rfind(" at line ") {
        Some(k) => text[..k].to_string(),
        None => text,
    };
    match e.classify() {
        Category::Data => Error::Schema {
            path: if path.is_empty() || path == "." {
                "(document)".into()
            } else {
                path
            },
            message,
        },
        _ => Error::Parse {
            offset: byte_offset(bytes, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message,
        },
    }
}

fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        json_error(bytes, e.into_inner(), path)
    })?;
    de.end().map_err(|e| json_error(bytes, e, String::new()))?;
    Ok(value)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents contain only finite numbers");
    out.push(b'\n');
    out
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// A gain written either as a linear ratio or as `"<x> dB"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainValue {
    Linear(f64),
    Text(String),
}

impl GainValue {
    pub fn to_linear(&self, path: &str) -> Result<f64> {
        match self {
            GainValue::Linear(v) => Ok(*v),
            GainValue::Text(t) => {
                let t = t.trim();
                let body = t
                    .len()
                    .checked_sub(2)
                    .filter(|&k| t.is_char_boundary(k) && t[k..].eq_ignore_ascii_case("db"))
                    .map(|k| t[..k].trim());
                match body.and_then(|b| b.parse::<f64>().ok()) {
                    Some(db) => Ok(10f64.powf(db / 10.0)),
                    None => Err(schema(
                        path,
                        format!("expected a number or a string like \"-110 dB\", got {t:?}"),
                    )),
                }
            }
        }
    }
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: usize,
    kind: NodeKind,
    position_m: [f64; 3],
    #[serde(default)]
    proc_delay_s: f64,
    power_budget_w: f64,
    #[serde(default)]
    rate_ul_bps: f64,
    #[serde(default)]
    rate_dl_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    from: usize,
    to: usize,
    p_max_w: f64,
    #[serde(default)]
    wired_capacity_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumDoc {
    num_subchannels: usize,
    bandwidth_hz: f64,
    #[serde(default)]
    access_subchannels: Vec<usize>,
    /// `[link][subchannel]`; when absent every entry is `noise_density · B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_w: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_density_w_per_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaDoc {
    victim: LinkId,
    aggressor: LinkId,
    /// Applies to every subchannel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subchannel: Option<usize>,
    gain: GainValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OmegaDoc {
    link: LinkId,
    node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subchannel: Option<usize>,
    gain: GainValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDoc {
    lambda: Vec<Vec<GainValue>>,
    #[serde(default)]
    gamma: Vec<GammaDoc>,
    #[serde(default)]
    omega: Vec<OmegaDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostsDoc {
    w_power_per_w: f64,
    w_link: f64,
    w_spectrum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsDoc {
    #[serde(default)]
    i_th_w: Vec<Vec<Option<f64>>>,
    #[serde(default)]
    delay_ul_s: Option<f64>,
    #[serde(default)]
    delay_dl_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    nodes: Vec<NodeDoc>,
    links: Vec<LinkDoc>,
    spectrum: SpectrumDoc,
    gains: GainsDoc,
    costs: CostsDoc,
    limits: LimitsDoc,
}

fn subchannels(sel: Option<usize>, nf: usize, path: &str) -> Result<std::ops::Range<usize>> {
    match sel {
        None => Ok(0..nf),
        Some(f) if f < nf => Ok(f..f + 1),
        Some(f) => Err(schema(
            format!("{path}.subchannel"),
            format!("subchannel {f} out of range"),
        )),
    }
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        let nodes: Vec<Node> = self
            .nodes
            .into_iter()
            .map(|n| {
                let mut node = Node {
                    id: n.id,
                    kind: n.kind,
                    position: n.position_m,
                    proc_delay: n.proc_delay_s,
                    power_budget: n.power_budget_w,
                    rate_ul: n.rate_ul_bps,
                    rate_dl: n.rate_dl_bps,
                };
                if node.is_root() && (node.rate_ul != 0.0 || node.rate_dl != 0.0) {
                    warn!("root node {} has a demand; set to zero", node.id);
                    node.rate_ul = 0.0;
                    node.rate_dl = 0.0;
                }
                node
            })
            .collect();
        let links: Vec<Link> = self
            .links
            .into_iter()
            .map(|l| Link {
                from: l.from,
                to: l.to,
                p_max: l.p_max_w,
                wired_capacity: l.wired_capacity_bps,
            })
            .collect();
        let (nl, nn, nf) = (links.len(), nodes.len(), self.spectrum.num_subchannels);

        let sp = self.spectrum;
        let noise_power = match sp.noise_w {
            Some(w) => w,
            None => {
                let n0 = sp.noise_density_w_per_hz.unwrap_or(DEFAULT_NOISE_DENSITY);
                vec![vec![n0 * sp.bandwidth_hz; nf]; nl]
            }
        };
        let spectrum = Spectrum {
            num_subchannels: nf,
            bandwidth: sp.bandwidth_hz,
            access_subchannels: sp.access_subchannels,
            noise_power,
        };

        let mut gains = Gains::zeros(nl, nn, nf);
        if self.gains.lambda.len() != nl {
            return Err(schema("gains.lambda", format!("expected {nl} rows, one per link")));
        }
        for (l, row) in self.gains.lambda.iter().enumerate() {
            if row.len() != nf {
                return Err(schema(format!("gains.lambda[{l}]"), format!("expected {nf} entries")));
            }
            for (f, g) in row.iter().enumerate() {
                gains.lambda[l][f] = g.to_linear(&format!("gains.lambda[{l}][{f}]"))?;
            }
        }
        for (k, e) in self.gains.gamma.iter().enumerate() {
            let path = format!("gains.gamma[{k}]");
            if e.victim >= nl || e.aggressor >= nl {
                return Err(schema(path, "link index out of range"));
            }
            if e.victim == e.aggressor {
                return Err(schema(path, "a link does not interfere with itself; use lambda"));
            }
            let g = e.gain.to_linear(&format!("{path}.gain"))?;
            for f in subchannels(e.subchannel, nf, &path)? {
                gains.set_gamma(e.victim, e.aggressor, f, g);
            }
        }
        for (k, e) in self.gains.omega.iter().enumerate() {
            let path = format!("gains.omega[{k}]");
            if e.link >= nl || e.node >= nn {
                return Err(schema(path, "link or node index out of range"));
            }
            let g = e.gain.to_linear(&format!("{path}.gain"))?;
            for f in subchannels(e.subchannel, nf, &path)? {
                gains.set_omega(e.link, e.node, f, g);
            }
        }

        let c = self.costs;
        let costs = CostWeights {
            w_power: c.w_power_per_w,
            w_link: c.w_link,
            w_spectrum: c.w_spectrum,
        };
        let na = spectrum.access_subchannels.len();
        let lim = self.limits;
        let i_th = if lim.i_th_w.is_empty() {
            vec![vec![f64::INFINITY; na]; nn]
        } else {
            lim.i_th_w
                .iter()
                .map(|r| r.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect())
                .collect()
        };
        let limits = Limits {
            i_th,
            delay_ul: lim.delay_ul_s.unwrap_or(f64::INFINITY),
            delay_dl: lim.delay_dl_s.unwrap_or(f64::INFINITY),
        };
        Ok(Scenario {
            nodes,
            links,
            spectrum,
            gains,
            costs,
            limits,
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        let nl = s.num_links();
        let nf = s.num_subchannels();
        let mut gamma = Vec::new();
        let mut omega = Vec::new();
        for v in 0..nl {
            for a in (0..nl).filter(|&a| a != v) {
                for f in 0..nf {
                    let g = s.gains.gamma(v, a, f);
                    if g != 0.0 {
                        gamma.push(GammaDoc {
                            victim: v,
                            aggressor: a,
                            subchannel: Some(f),
                            gain: GainValue::Linear(g),
                        });
                    }
                }
            }
            for m in 0..s.nodes.len() {
                for f in 0..nf {
                    let g = s.gains.omega(v, m, f);
                    if g != 0.0 {
                        omega.push(OmegaDoc {
                            link: v,
                            node: m,
                            subchannel: Some(f),
                            gain: GainValue::Linear(g),
                        });
                    }
                }
            }
        }
        ScenarioDoc {
            nodes: s
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id,
                    kind: n.kind,
                    position_m: n.position,
                    proc_delay_s: n.proc_delay,
                    power_budget_w: n.power_budget,
                    rate_ul_bps: n.rate_ul,
                    rate_dl_bps: n.rate_dl,
                })
                .collect(),
            links: s
                .links
                .iter()
                .map(|l| LinkDoc {
                    from: l.from,
                    to: l.to,
                    p_max_w: l.p_max,
                    wired_capacity_bps: l.wired_capacity,
                })
                .collect(),
            spectrum: SpectrumDoc {
                num_subchannels: nf,
                bandwidth_hz: s.spectrum.bandwidth,
                access_subchannels: s.spectrum.access_subchannels.clone(),
                noise_w: Some(s.spectrum.noise_power.clone()),
                noise_density_w_per_hz: None,
            },
            gains: GainsDoc {
                lambda: s
                    .gains
                    .lambda
                    .iter()
                    .map(|r| r.iter().map(|&v| GainValue::Linear(v)).collect())
                    .collect(),
                gamma,
                omega,
            },
            costs: CostsDoc {
                w_power_per_w: s.costs.w_power,
                w_link: s.costs.w_link,
                w_spectrum: s.costs.w_spectrum,
            },
            limits: LimitsDoc {
                i_th_w: s
                    .limits
                    .i_th
                    .iter()
                    .map(|r| r.iter().map(|&v| finite_or_none(v)).collect())
                    .collect(),
                delay_ul_s: finite_or_none(s.limits.delay_ul),
                delay_dl_s: finite_or_none(s.limits.delay_dl),
            },
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario> {
    let doc: ScenarioDoc = from_json(bytes)?;
    let s = doc.into_scenario()?;
    let violations = validate_scenario(&s);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    Ok(s)
}

pub fn write_scenario(s: &Scenario) -> Vec<u8> {
    to_json(&ScenarioDoc::from_scenario(s))
}

/// The on-disk form of a [`Plan`], with optional annotations added by the
/// command-line tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    /// Watts, `[link][subchannel]`.
    pub powers: Vec<Vec<f64>>,
    /// Bits/s per link.
    pub flow_ul: Vec<f64>,
    pub flow_dl: Vec<f64>,
    pub active_links: Vec<LinkId>,
    pub active_subchannels: Vec<usize>,
    pub cost_breakdown: CostBreakdown,
    /// Bits/s, `[link][subchannel]`.
    pub exact_capacities: Vec<Vec<f64>>,
    #[serde(default)]
    pub feasible: bool,
    #[serde(default)]
    pub trace: IterationTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c5_dl_direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Value>,
}

impl PlanDocument {
    pub fn from_plan(p: &Plan) -> Self {
        Self {
            powers: p.powers.to_rows(),
            flow_ul: p.flow_ul.clone(),
            flow_dl: p.flow_dl.clone(),
            active_links: p.active_links.iter().copied().collect(),
            active_subchannels: p.active_subchannels.iter().copied().collect(),
            cost_breakdown: p.cost,
            exact_capacities: p.exact_capacities.clone(),
            feasible: p.feasible,
            trace: p.trace.clone(),
            c5_dl_direction: None,
            validation: None,
        }
    }

    pub fn to_plan(&self) -> Result<Plan> {
        let powers = PowerVector::from_rows(&self.powers).map_err(|e| schema("powers", e.to_string()))?;
        if self.flow_ul.len() != powers.num_links() || self.flow_dl.len() != powers.num_links() {
            return Err(schema("flow_ul", "flows must have one entry per link of `powers`"));
        }
        Ok(Plan {
            powers,
            flow_ul: self.flow_ul.clone(),
            flow_dl: self.flow_dl.clone(),
            active_links: self.active_links.iter().copied().collect(),
            active_subchannels: self.active_subchannels.iter().copied().collect(),
            exact_capacities: self.exact_capacities.clone(),
            cost: self.cost_breakdown,
            feasible: self.feasible,
            trace: self.trace.clone(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        to_json(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        from_json(bytes)
    }
}

pub fn write_plan(p: &Plan) -> Vec<u8> {
    PlanDocument::from_plan(p).to_bytes()
}

/// Parses a plan document. Ids are not checked against any scenario; use
/// [`Plan::check_against`] for that.
pub fn parse_plan(bytes: &[u8]) -> Result<Plan> {
    PlanDocument::from_bytes(bytes)?.to_plan()
}

/// Parameters of the synthetic scenario generator.
///
/// Nodes are dropped uniformly in a square at ground level. A directed link
/// exists between two nodes (not both roots) within `max_link_distance_m`.
/// Channel gains follow `G · (c / (4π d f_c))² · d^(2-α)` with boresight gains
/// on desired paths and sidelobe gains on every cross path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub num_nonroot: usize,
    pub num_root: usize,
    pub area_side_m: f64,
    pub max_link_distance_m: f64,
    pub carrier_freq_hz: f64,
    pub pathloss_exponent: f64,
    /// Linear antenna gain towards the intended peer, used at both ends.
    pub tx_antenna_gain_boresight: f64,
    pub antenna_gain_sidelobe: f64,
    /// Residual self-interference power over transmit power.
    pub sic_attenuation: f64,
    pub seed: u64,
    /// `[low, high]` ranges sampled uniformly per node.
    pub rate_ul_bps: [f64; 2],
    pub rate_dl_bps: [f64; 2],
    pub power_budget_w: [f64; 2],
    pub proc_delay_s: [f64; 2],
    pub link_p_max_w: f64,
    pub num_subchannels: usize,
    /// The last `num_access_subchannels` subchannels are shared with access.
    pub num_access_subchannels: usize,
    pub bandwidth_hz: f64,
    pub noise_density_w_per_hz: f64,
    pub costs: CostWeights,
    pub i_th_w: f64,
    pub delay_ul_s: f64,
    pub delay_dl_s: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            num_nonroot: 3,
            num_root: 1,
            area_side_m: 200.0,
            max_link_distance_m: 150.0,
            carrier_freq_hz: 28e9,
            pathloss_exponent: 2.5,
            tx_antenna_gain_boresight: 100.0,
            antenna_gain_sidelobe: 0.1,
            sic_attenuation: 1e-11,
            seed: 1,
            rate_ul_bps: [5e6, 2e7],
            rate_dl_bps: [5e6, 2e7],
            power_budget_w: [0.5, 1.0],
            proc_delay_s: [1e-3, 2e-3],
            link_p_max_w: 1.0,
            num_subchannels: 2,
            num_access_subchannels: 1,
            bandwidth_hz: 1e7,
            noise_density_w_per_hz: DEFAULT_NOISE_DENSITY,
            costs: CostWeights {
                w_power: 1.0,
                w_link: 1.0,
                w_spectrum: 1.0,
            },
            i_th_w: 1e-12,
            delay_ul_s: 0.05,
            delay_dl_s: 0.05,
        }
    }
}

impl GeneratorParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        let range_ok = |r: [f64; 2], lo_min: f64| r[0] >= lo_min && r[1] >= r[0] && r[1].is_finite();
        if !(self.max_link_distance_m > 0.0) {
            return bad("max_link_distance_m must be > 0");
        }
        if !(self.pathloss_exponent >= 2.0) {
            return bad("pathloss_exponent must be >= 2");
        }
        if !(0.0..=1.0).contains(&self.sic_attenuation) {
            return bad("sic_attenuation must lie in [0, 1]");
        }
        if !(self.area_side_m >= 0.0) || !(self.carrier_freq_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return bad("area, carrier frequency and bandwidth must be positive");
        }
        if !(self.tx_antenna_gain_boresight > 0.0) || !(self.antenna_gain_sidelobe >= 0.0) {
            return bad("antenna gains must be positive");
        }
        if self.num_subchannels == 0 || self.num_access_subchannels > self.num_subchannels {
            return bad("need at least one subchannel and no more access subchannels than subchannels");
        }
        if !range_ok(self.rate_ul_bps, 0.0) || !range_ok(self.rate_dl_bps, 0.0) || !range_ok(self.proc_delay_s, 0.0) {
            return bad("demand and delay ranges must satisfy 0 <= low <= high");
        }
        if !(self.power_budget_w[0] > 0.0) || !range_ok(self.power_budget_w, 0.0) || !(self.link_p_max_w > 0.0) {
            return bad("power budgets and link caps must be > 0");
        }
        if !(self.noise_density_w_per_hz > 0.0)
            || !(self.i_th_w > 0.0)
            || !(self.delay_ul_s > 0.0)
            || !(self.delay_dl_s > 0.0)
        {
            return bad("noise density, interference threshold and delay bounds must be > 0");
        }
        Ok(())
    }
}

/// Free-space-style path gain `(c / (4π d f_c))² · d^(2-α)` with `d` clamped to
/// at least one meter.
pub fn path_gain(distance_m: f64, carrier_freq_hz: f64, pathloss_exponent: f64) -> f64 {
    let d = distance_m.max(1.0);
    let friis = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * d * carrier_freq_hz);
    friis * friis * d.powf(2.0 - pathloss_exponent)
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform draw on `[0, 1)` from the top 53 bits of the next output.
fn uniform(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn draw(rng: &mut Pcg64, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * uniform(rng)
}

/// Generates a scenario from `params`.
///
/// Nodes are numbered roots first. Per node the draws are, in order: x, y,
/// power budget, processing delay and, for non-roots, UL then DL demand.
pub fn generate_synthetic(params: &GeneratorParams) -> Result<Scenario> {
    params.check()?;
    let p = params;
    let mut rng = Pcg64::new(p.seed as u128, PCG_STREAM);
    let n = p.num_root + p.num_nonroot;
    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        let kind = if id < p.num_root {
            NodeKind::Root
        } else {
            NodeKind::NonRoot
        };
        let x = p.area_side_m * uniform(&mut rng);
        let y = p.area_side_m * uniform(&mut rng);
        let power_budget = draw(&mut rng, p.power_budget_w);
        let proc_delay = draw(&mut rng, p.proc_delay_s);
        let (rate_ul, rate_dl) = if kind == NodeKind::NonRoot {
            (draw(&mut rng, p.rate_ul_bps), draw(&mut rng, p.rate_dl_bps))
        } else {
            (0.0, 0.0)
        };
        nodes.push(Node {
            id,
            kind,
            position: [x, y, 0.0],
            proc_delay,
            power_budget,
            rate_ul,
            rate_dl,
        });
    }

    let mut links = Vec::new();
    for a in &nodes {
        for b in &nodes {
            if a.id == b.id || (a.is_root() && b.is_root()) {
                continue;
            }
            if distance(&a.position, &b.position) <= p.max_link_distance_m {
                links.push(Link {
                    from: a.id,
                    to: b.id,
                    p_max: p.link_p_max_w,
                    wired_capacity: 0.0,
                });
            }
        }
    }
    if links.is_empty() && p.num_nonroot > 0 {
        return Err(Error::NoCandidateLinks {
            max_link_distance: p.max_link_distance_m,
        });
    }

    let nl = links.len();
    let nf = p.num_subchannels;
    let gain = |from: usize, to: usize, antennas: f64| {
        antennas
            * path_gain(
                distance(&nodes[from].position, &nodes[to].position),
                p.carrier_freq_hz,
                p.pathloss_exponent,
            )
    };
    let boresight = p.tx_antenna_gain_boresight * p.tx_antenna_gain_boresight;
    let sidelobe = p.antenna_gain_sidelobe * p.antenna_gain_sidelobe;
    let mut gains = Gains::zeros(nl, n, nf);
    for (v, victim) in links.iter().enumerate() {
        let desired = gain(victim.from, victim.to, boresight);
        gains.lambda[v] = vec![desired; nf];
        for (a, aggressor) in links.iter().enumerate() {
            if a == v {
                continue;
            }
            let g = if aggressor.from == victim.to {
                p.sic_attenuation
            } else {
                gain(aggressor.from, victim.to, sidelobe)
            };
            for f in 0..nf {
                gains.set_gamma(v, a, f, g);
            }
        }
        for m in (0..n).filter(|&m| m != victim.from) {
            let g = gain(victim.from, m, p.antenna_gain_sidelobe);
            for f in 0..nf {
                gains.set_omega(v, m, f, g);
            }
        }
    }

    let access: Vec<usize> = (nf - p.num_access_subchannels..nf).collect();
    let s = Scenario {
        spectrum: Spectrum {
            num_subchannels: nf,
            bandwidth: p.bandwidth_hz,
            noise_power: vec![vec![p.noise_density_w_per_hz * p.bandwidth_hz; nf]; nl],
            access_subchannels: access.clone(),
        },
        limits: Limits {
            i_th: vec![vec![p.i_th_w; access.len()]; n],
            delay_ul: p.delay_ul_s,
            delay_dl: p.delay_dl_s,
        },
        nodes,
        links,
        gains,
        costs: p.costs,
    };
    let violations = validate_scenario(&s);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_node;

    #[test]
    fn db_strings_convert_to_linear() {
        let g = GainValue::Text("-110 dB".into()).to_linear("x").unwrap();
        assert!((g - 1e-11).abs() < 1e-24);
        assert_eq!(GainValue::Text("0dB".into()).to_linear("x").unwrap(), 1.0);
        assert!((GainValue::Text(" 30 db ".into()).to_linear("x").unwrap() - 1e3).abs() < 1e-9);
        assert!(matches!(
            GainValue::Text("loud".into()).to_linear("gains.gamma[0].gain"),
            Err(Error::Schema { path, .. }) if path == "gains.gamma[0].gain"
        ));
    }

    #[test]
    fn byte_offsets_follow_lines() {
        let doc = b"ab\ncde\nf";
        assert_eq!(byte_offset(doc, 1, 1), 0);
        assert_eq!(byte_offset(doc, 2, 2), 4);
        assert_eq!(byte_offset(doc, 3, 1), 7);
        assert_eq!(byte_offset(doc, 9, 9), doc.len());
    }

    #[test]
    fn two_node_round_trip() {
        let s = two_node(2);
        let back = parse_scenario(&write_scenario(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn root_demand_is_zeroed() {
        let mut s = two_node(1);
        let mut doc = ScenarioDoc::from_scenario(&s);
        doc.nodes[0].rate_ul_bps = 5.0;
        let back = parse_scenario(&to_json(&doc)).unwrap();
        assert_eq!(back.nodes[0].rate_ul, 0.0);
        s.nodes[0].rate_ul = 0.0;
        assert_eq!(back, s);
    }

    #[test]
    fn missing_noise_uses_density_times_bandwidth() {
        let s = two_node(1);
        let mut doc = ScenarioDoc::from_scenario(&s);
        doc.spectrum.noise_w = None;
        let back = parse_scenario(&to_json(&doc)).unwrap();
        assert_eq!(back.spectrum.noise_power[1][0], DEFAULT_NOISE_DENSITY * 1e7);
    }

    #[test]
    fn wrong_type_reports_path() {
        let s = two_node(1);
        let text = String::from_utf8(write_scenario(&s)).unwrap();
        let broken = text.replacen("\"power_budget_w\": 1.0", "\"power_budget_w\": \"lots\"", 1);
        assert_ne!(broken, text);
        match parse_scenario(broken.as_bytes()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "nodes[0].power_budget_w"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn friis_example() {
        let expected = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 100.0 * 6e10)).powi(2);
        let g = path_gain(100.0, 60e9, 2.0);
        assert!((g - expected).abs() <= 1e-12 * expected);
        assert!((g - 1.581e-11).abs() < 1e-14);
    }

    #[test]
    fn single_root_has_no_links() {
        let p = GeneratorParams {
            num_nonroot: 0,
            num_root: 1,
            ..GeneratorParams::default()
        };
        let s = generate_synthetic(&p).unwrap();
        assert_eq!(s.nodes.len(), 1);
        assert_eq!(s.num_links(), 0);
        assert_eq!(parse_scenario(&write_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn unreachable_nodes_report_no_links() {
        let p = GeneratorParams {
            max_link_distance_m: 1e-6,
            ..GeneratorParams::default()
        };
        assert!(matches!(generate_synthetic(&p), Err(Error::NoCandidateLinks { .. })));
    }

    #[test]
    fn bad_params_are_rejected() {
        for p in [
            GeneratorParams {
                pathloss_exponent: 1.5,
                ..GeneratorParams::default()
            },
            GeneratorParams {
                sic_attenuation: 2.0,
                ..GeneratorParams::default()
            },
            GeneratorParams {
                max_link_distance_m: 0.0,
                ..GeneratorParams::default()
            },
        ] {
            assert!(matches!(generate_synthetic(&p), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn self_interference_entries_use_sic_attenuation() {
        let s = generate_synthetic(&GeneratorParams::default()).unwrap();
        let pairs = crate::model::self_interference_pairs(&s);
        assert!(!pairs.is_empty());
        for (a, v) in pairs {
            assert_eq!(s.gains.gamma(v, a, 0), 1e-11);
        }
    }
}
