//! Max-flow / min-cut on small dense graphs, used to explain infeasible
//! demands before any MILP is solved.

use std::collections::VecDeque;

use crate::model::{NodeId, Scenario};

/// Edmonds-Karp on a dense capacity matrix.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    cap: Vec<Vec<f64>>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            cap: vec![vec![0.0; n]; n],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: f64) {
        self.cap[from][to] += capacity;
    }

    /// Maximum flow value and the source side of a minimum cut.
    pub fn max_flow(&self, source: usize, sink: usize) -> (f64, Vec<bool>) {
        let n = self.cap.len();
        let mut residual = self.cap.clone();
        let mut total = 0.0;
        loop {
            let mut parent = vec![usize::MAX; n];
            parent[source] = source;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if parent[v] == usize::MAX && residual[u][v] > 0.0 {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[sink] == usize::MAX {
                let reachable = parent.iter().map(|&p| p != usize::MAX).collect();
                return (total, reachable);
            }
            let mut push = f64::INFINITY;
            let mut v = sink;
            while v != source {
                let u = parent[v];
                push = push.min(residual[u][v]);
                v = u;
            }
            let mut v = sink;
            while v != source {
                let u = parent[v];
                residual[u][v] -= push;
                residual[v][u] += push;
                v = u;
            }
            total += push;
        }
    }
}

/// Outcome of checking one traffic direction against an upper bound on every
/// link's capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct CutDiagnosis {
    pub direction: &'static str,
    pub demand: f64,
    pub max_flow: f64,
    /// Nodes on the demand side of the bottleneck cut.
    pub cut: Vec<NodeId>,
}

impl std::fmt::Display for CutDiagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} demand {:.6e} bit/s exceeds the {:.6e} bit/s that can cross the cut around nodes {:?} \
             even at full power without interference",
            self.direction, self.demand, self.max_flow, self.cut
        )
    }
}

/// Upper bound on a link's capacity: wired capacity plus every subchannel at
/// full power with no interference.
pub fn link_capacity_bound(s: &Scenario, link: usize) -> f64 {
    let cap = s.power_cap(link);
    let wireless: f64 = (0..s.num_subchannels())
        .map(|f| {
            let snr = s.gains.lambda[link][f] * cap / s.spectrum.noise_power[link][f];
            s.spectrum.bandwidth * snr.ln_1p() / std::f64::consts::LN_2
        })
        .sum();
    s.links[link].wired_capacity + wireless
}

/// Returns the first traffic direction whose demand cannot be routed even
/// with every link at its capacity bound.
pub fn diagnose_cuts(s: &Scenario) -> Option<CutDiagnosis> {
    let n = s.nodes.len();
    let (source, sink) = (n, n + 1);
    for direction in ["UL", "DL"] {
        let mut net = FlowNetwork::new(n + 2);
        for (l, link) in s.links.iter().enumerate() {
            let c = link_capacity_bound(s, l);
            match direction {
                "UL" => net.add_edge(link.from, link.to, c),
                _ => net.add_edge(link.to, link.from, c),
            }
        }
        let mut demand = 0.0;
        for node in &s.nodes {
            if node.is_root() {
                net.add_edge(node.id, sink, f64::INFINITY);
            } else {
                let r = if direction == "UL" { node.rate_ul } else { node.rate_dl };
                net.add_edge(source, node.id, r);
                demand += r;
            }
        }
        let (flow, side) = net.max_flow(source, sink);
        if flow < demand * (1.0 - 1e-12) {
            return Some(CutDiagnosis {
                direction,
                demand,
                max_flow: flow,
                cut: (0..n).filter(|&v| side[v]).collect(),
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_node;

    #[test]
    fn classic_max_flow() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 3.0);
        g.add_edge(0, 2, 2.0);
        g.add_edge(1, 2, 5.0);
        g.add_edge(1, 3, 2.0);
        g.add_edge(2, 3, 3.0);
        let (flow, side) = g.max_flow(0, 3);
        assert_eq!(flow, 5.0);
        assert!(side[0] && !side[3]);
    }

    #[test]
    fn over_demand_is_diagnosed() {
        let mut s = two_node(1);
        assert!(diagnose_cuts(&s).is_none());
        s.nodes[1].rate_ul = 1e9;
        let d = diagnose_cuts(&s).unwrap();
        assert_eq!(d.direction, "UL");
        assert_eq!(d.cut, vec![1]);
        assert!(d.max_flow < 1e9);
    }
}
