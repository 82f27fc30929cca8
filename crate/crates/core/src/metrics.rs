//! Per-step network performance: flow hop counts, system goodput,
//! connectivity ratio, and transmission power.
//!
//! Delivery is store-and-forward, so a connected flow contributes the
//! per-link rate divided by its hop count and the data size cancels out of
//! every reported number.

use std::collections::VecDeque;

use crate::net::{Network, TopologySnapshot};

/// Outcome of one (source, terminal) delivery requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowResult {
    pub source_id: usize,
    pub terminal_id: usize,
    /// Minimum directed hop count, or `None` when no path exists.
    pub hops: Option<usize>,
}

/// All per-step performance numbers derived from one topology snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub goodput_mbps: f64,
    /// Goodput normalized by `flows x per-link throughput`, in [0, 1];
    /// this is the value broadcast to the agents.
    pub phi: f64,
    /// Reachable flows over total flows.
    pub connectivity_ratio: f64,
    /// dBm of the arithmetic mean relay transmit power in mW;
    /// `-inf` when no relay transmits.
    pub mean_power_dbm: f64,
    /// Transmit power per relay in mW, in relay order.
    pub per_node_power_mw: Vec<f64>,
}

impl StepMetrics {
    /// Arithmetic mean relay transmit power in mW (0 when there are no
    /// relays).
    pub fn mean_power_mw(&self) -> f64 {
        if self.per_node_power_mw.is_empty() {
            0.0
        } else {
            self.per_node_power_mw.iter().sum::<f64>() / self.per_node_power_mw.len() as f64
        }
    }
}

fn bfs_distances(adjacency: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u].unwrap() + 1;
        for &v in &adjacency[u] {
            if dist[v].is_none() {
                dist[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Minimum directed hop count for every (source, terminal) pair, by
/// breadth-first search from each source.
pub fn flow_hop_counts(topology: &TopologySnapshot, network: &Network) -> Vec<FlowResult> {
    let adjacency = topology.adjacency();
    let mut out = Vec::with_capacity(network.terminal_count());
    for (h, &source_id) in network.source_ids.iter().enumerate() {
        let dist = bfs_distances(&adjacency, source_id);
        for &terminal_id in &network.terminal_map[h] {
            out.push(FlowResult {
                source_id,
                terminal_id,
                hops: dist[terminal_id],
            });
        }
    }
    out
}

/// One shortest path as a node sequence `[src, ..., dst]`, or `None` when
/// unreachable. Used for snapshot export.
pub fn shortest_path(topology: &TopologySnapshot, src: usize, dst: usize) -> Option<Vec<usize>> {
    let adjacency = topology.adjacency();
    let mut parent: Vec<Option<usize>> = vec![None; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            let mut path = vec![dst];
            let mut at = dst;
            while let Some(p) = parent[at] {
                path.push(p);
                at = p;
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}

/// Sum over reachable flows of `link_throughput / hop_count`.
pub fn system_goodput(flows: &[FlowResult], link_throughput_mbps: f64) -> f64 {
    flows
        .iter()
        .filter_map(|f| f.hops)
        .map(|hops| link_throughput_mbps / hops as f64)
        .sum()
}

/// Reachable flows over total flows.
pub fn connectivity_ratio(flows: &[FlowResult]) -> f64 {
    debug_assert!(!flows.is_empty(), "connectivity needs at least one flow");
    let reachable = flows.iter().filter(|f| f.hops.is_some()).count();
    reachable as f64 / flows.len() as f64
}

/// Transmit power in mW needed to cover `radius`: `eta * radius^alpha`.
pub fn tx_power_mw(radius: f64, eta: f64, alpha: f64) -> f64 {
    eta * radius.powf(alpha)
}

/// dBm of the arithmetic mean of the per-relay mW powers. All radii zero
/// means zero mean power, reported as `-inf`.
pub fn mean_power_dbm(radii: &[f64], eta: f64, alpha: f64) -> f64 {
    debug_assert!(!radii.is_empty(), "mean power needs at least one relay");
    let mean_mw = radii.iter().map(|&r| tx_power_mw(r, eta, alpha)).sum::<f64>() / radii.len() as f64;
    dbm_from_mw(mean_mw)
}

pub fn dbm_from_mw(mw: f64) -> f64 {
    if mw > 0.0 {
        10.0 * mw.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Assemble every per-step metric from one snapshot.
pub fn step_metrics(
    topology: &TopologySnapshot,
    network: &Network,
    link_throughput_mbps: f64,
    path_loss_eta: f64,
    path_loss_alpha: f64,
) -> StepMetrics {
    let flows = flow_hop_counts(topology, network);
    let goodput_mbps = system_goodput(&flows, link_throughput_mbps);
    let phi = goodput_mbps / (flows.len() as f64 * link_throughput_mbps);
    let connectivity = connectivity_ratio(&flows);
    let per_node_power_mw: Vec<f64> = network
        .relay_ids
        .iter()
        .map(|&id| tx_power_mw(network.nodes[id].radius, path_loss_eta, path_loss_alpha))
        .collect();
    let mean_mw = if per_node_power_mw.is_empty() {
        0.0
    } else {
        per_node_power_mw.iter().sum::<f64>() / per_node_power_mw.len() as f64
    };
    StepMetrics {
        goodput_mbps,
        phi,
        connectivity_ratio: connectivity,
        mean_power_dbm: dbm_from_mw(mean_mw),
        per_node_power_mw,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Node, NodeKind, RegionSpec};

    fn flow(hops: Option<usize>) -> FlowResult {
        FlowResult {
            source_id: 0,
            terminal_id: 1,
            hops,
        }
    }

    /// Source 0, terminal 1, relays 2.. — a line network with controllable
    /// radii.
    fn line_network(source_radius: f64, relay_radii: &[f64]) -> (Network, TopologySnapshot) {
        let mut nodes = vec![
            Node {
                id: 0,
                kind: NodeKind::Source,
                x: 0.0,
                y: 0.0,
                radius: source_radius,
            },
            Node {
                id: 1,
                kind: NodeKind::Terminal,
                x: 10.0 * (relay_radii.len() + 1) as f64,
                y: 0.0,
                radius: 0.0,
            },
        ];
        let mut relay_ids = Vec::new();
        for (i, &r) in relay_radii.iter().enumerate() {
            let id = nodes.len();
            relay_ids.push(id);
            nodes.push(Node {
                id,
                kind: NodeKind::Relay,
                x: 10.0 * (i + 1) as f64,
                y: 0.0,
                radius: r,
            });
        }
        let net = Network {
            region: RegionSpec {
                width: 1000.0,
                height: 1000.0,
            },
            nodes,
            source_ids: vec![0],
            relay_ids,
            terminal_map: vec![vec![1]],
        };
        let topo = crate::net::build_graph(&net, 1);
        (net, topo)
    }

    #[test]
    fn direct_edge_is_one_hop() {
        let (net, topo) = line_network(10.0, &[]);
        let flows = flow_hop_counts(&topo, &net);
        assert_eq!(flows, vec![flow(Some(1))]);
    }

    #[test]
    fn forced_relay_hop_is_two_hops() {
        let (net, topo) = line_network(10.0, &[10.0]);
        let flows = flow_hop_counts(&topo, &net);
        assert_eq!(flows[0].hops, Some(2));
    }

    #[test]
    fn silent_relays_leave_flow_unreachable() {
        let (net, topo) = line_network(10.0, &[0.0, 0.0]);
        let flows = flow_hop_counts(&topo, &net);
        assert_eq!(flows[0].hops, None);
    }

    #[test]
    fn shortest_path_matches_hop_count() {
        let (net, topo) = line_network(10.0, &[10.0, 10.0]);
        let flows = flow_hop_counts(&topo, &net);
        let path = shortest_path(&topo, 0, 1).unwrap();
        assert_eq!(path.len() - 1, flows[0].hops.unwrap());
        assert_eq!(path.first(), Some(&0));
        assert_eq!(path.last(), Some(&1));
        let (_, unreachable_topo) = line_network(10.0, &[0.0]);
        assert!(shortest_path(&unreachable_topo, 0, 1).is_none());
    }

    #[test]
    fn goodput_sums_rate_over_hops() {
        assert_eq!(system_goodput(&[flow(Some(2)), flow(None)], 910.0), 455.0);
        assert_eq!(system_goodput(&[flow(Some(1)), flow(Some(1))], 910.0), 1820.0);
        assert_eq!(system_goodput(&[flow(None), flow(None)], 910.0), 0.0);
    }

    #[test]
    fn connectivity_is_reachable_fraction() {
        assert_eq!(connectivity_ratio(&[flow(Some(3)), flow(None)]), 0.5);
        assert_eq!(connectivity_ratio(&[flow(Some(1)), flow(Some(9))]), 1.0);
        assert_eq!(connectivity_ratio(&[flow(None)]), 0.0);
    }

    #[test]
    fn tx_power_follows_path_loss() {
        assert!((tx_power_mw(3.0, 1.0, 2.0) - 9.0).abs() < 1e-12);
        assert_eq!(tx_power_mw(0.0, 1.0, 2.0), 0.0);
        assert!((tx_power_mw(1.0, 1.0, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_power_aggregates_in_milliwatts() {
        let all_max = mean_power_dbm(&[3.0, 3.0, 3.0], 1.0, 2.0);
        assert!((all_max - 10.0 * 9.0f64.log10()).abs() < 1e-9);
        assert!((all_max - 9.54).abs() < 0.01);
        let half = mean_power_dbm(&[3.0, 0.0, 3.0, 0.0], 1.0, 2.0);
        assert!((half - 10.0 * 4.5f64.log10()).abs() < 1e-9);
        assert!((half - 6.53).abs() < 0.01);
        assert_eq!(mean_power_dbm(&[0.0, 0.0], 1.0, 2.0), f64::NEG_INFINITY);
    }

    #[test]
    fn phi_is_normalized_goodput() {
        let (net, topo) = line_network(10.0, &[10.0]);
        let m = step_metrics(&topo, &net, 910.0, 1.0, 2.0);
        assert!((m.goodput_mbps - 455.0).abs() < 1e-12);
        assert!((m.phi - 0.5).abs() < 1e-12);
        assert_eq!(m.connectivity_ratio, 1.0);
        assert_eq!(m.per_node_power_mw.len(), 1);
        assert!((m.per_node_power_mw[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn phi_equals_connectivity_when_all_flows_are_one_hop() {
        let (net, topo) = line_network(1000.0, &[0.0]);
        let m = step_metrics(&topo, &net, 910.0, 1.0, 2.0);
        assert_eq!(m.phi, m.connectivity_ratio);
    }
}
