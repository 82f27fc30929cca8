//! Oracle equivalence tests: the grid-based graph builder against a plain
//! pair scan, breadth-first hop counts against Floyd-Warshall, and the
//! analytic loss gradient against central finite differences. The oracles
//! live here and share no code with the implementation paths they check.

use rand::Rng;
use relaysim_core::ddqn::{init_params, loss_gradients, QNetParams};
use relaysim_core::metrics::flow_hop_counts;
use relaysim_core::net::{build_graph, Network, Node, NodeKind, RegionSpec, TopologySnapshot};
use relaysim_core::rng::derive_stream;

/// Every ordered sender/receiver pair, checked directly.
fn brute_force_edges(network: &Network) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for sender in &network.nodes {
        if !matches!(sender.kind, NodeKind::Source | NodeKind::Relay) {
            continue;
        }
        for receiver in &network.nodes {
            if receiver.id == sender.id
                || !matches!(receiver.kind, NodeKind::Relay | NodeKind::Terminal)
            {
                continue;
            }
            let dx = sender.x - receiver.x;
            let dy = sender.y - receiver.y;
            if dx * dx + dy * dy <= sender.radius * sender.radius {
                edges.push((sender.id, receiver.id));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// All-pairs hop counts by min-plus relaxation.
fn floyd_warshall(topology: &TopologySnapshot) -> Vec<Vec<Option<usize>>> {
    let n = topology.num_nodes;
    const INF: usize = usize::MAX / 4;
    let mut dist = vec![vec![INF; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(i, j) in &topology.edges {
        dist[i][j] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            if dist[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|d| if d == INF { None } else { Some(d) })
                .collect()
        })
        .collect()
}

/// Random population with mixed kinds, arbitrary radii, and an id layout
/// matching the engine's (sources, terminals, relays).
fn random_network(rng: &mut impl Rng, max_nodes: usize) -> Network {
    let region = RegionSpec {
        width: rng.gen_range(10.0..120.0),
        height: rng.gen_range(10.0..120.0),
    };
    let n_sources = rng.gen_range(1..=3);
    let n_terminals = n_sources * rng.gen_range(1..=2);
    let budget = max_nodes.saturating_sub(n_sources + n_terminals);
    let n_relays = rng.gen_range(0..=budget);
    let max_radius = rng.gen_range(0.5..30.0);

    fn place(
        rng: &mut impl Rng,
        region: RegionSpec,
        kind: NodeKind,
        radius: f64,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let id = nodes.len();
        nodes.push(Node {
            id,
            kind,
            x: rng.gen_range(0.0..region.width),
            y: rng.gen_range(0.0..region.height),
            radius,
        });
        id
    }

    let mut nodes = Vec::new();
    let mut source_ids = Vec::new();
    for _ in 0..n_sources {
        let r = rng.gen_range(0.0..max_radius);
        source_ids.push(place(rng, region, NodeKind::Source, r, &mut nodes));
    }
    let per_source = n_terminals / n_sources;
    let mut terminal_map = vec![Vec::new(); n_sources];
    for t in 0..n_terminals {
        let id = place(rng, region, NodeKind::Terminal, 0.0, &mut nodes);
        terminal_map[t / per_source].push(id);
    }
    let mut relay_ids = Vec::new();
    for _ in 0..n_relays {
        let r = rng.gen_range(0.0..max_radius);
        relay_ids.push(place(rng, region, NodeKind::Relay, r, &mut nodes));
    }
    Network {
        region,
        nodes,
        source_ids,
        relay_ids,
        terminal_map,
    }
}

#[test]
fn grid_graph_matches_pair_scan_up_to_200_nodes() {
    let mut rng = derive_stream(2024, "oracle-graph", 0);
    for instance in 0..120 {
        let network = random_network(&mut rng, 200);
        let topology = build_graph(&network, 1);
        assert_eq!(
            topology.edges,
            brute_force_edges(&network),
            "edge set mismatch on instance {instance} with {} nodes",
            network.nodes.len()
        );
    }
}

#[test]
fn bfs_hop_counts_match_floyd_warshall() {
    let mut rng = derive_stream(2025, "oracle-paths", 0);
    for instance in 0..200 {
        let network = random_network(&mut rng, 50);
        let topology = build_graph(&network, 1);
        let all_pairs = floyd_warshall(&topology);
        for flow in flow_hop_counts(&topology, &network) {
            assert_eq!(
                flow.hops, all_pairs[flow.source_id][flow.terminal_id],
                "hop mismatch on instance {instance} flow {}->{}",
                flow.source_id, flow.terminal_id
            );
        }
    }
}

fn flatten(p: &QNetParams) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend_from_slice(&p.w1);
    v.extend_from_slice(&p.b1);
    v.extend_from_slice(&p.w2);
    v.extend_from_slice(&p.b2);
    v
}

fn perturbed(p: &QNetParams, index: usize, delta: f64) -> QNetParams {
    let mut q = p.clone();
    let (w1, b1, w2) = (q.w1.len(), q.b1.len(), q.w2.len());
    if index < w1 {
        q.w1[index] += delta;
    } else if index < w1 + b1 {
        q.b1[index - w1] += delta;
    } else if index < w1 + b1 + w2 {
        q.w2[index - w1 - b1] += delta;
    } else {
        q.b2[index - w1 - b1 - w2] += delta;
    }
    q
}

fn loss_only(p: &QNetParams, state: f64, action: usize, target: f64) -> f64 {
    let q = p.forward(state)[action];
    (q - target) * (q - target)
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = derive_stream(2026, "oracle-grad", 0);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..60 {
        let hidden = rng.gen_range(1..=8);
        let out = rng.gen_range(1..=21);
        let params = init_params(&mut rng, hidden, out);
        let state = rng.gen_range(0.01..0.9);
        let action = rng.gen_range(0..out);
        let target = rng.gen_range(-2.0..2.0);

        let (_, grads) = loss_gradients(&params, state, action, target);
        let flat_grads = flatten(&grads);
        for (index, &analytic) in flat_grads.iter().enumerate() {
            let plus = loss_only(&perturbed(&params, index, h), state, action, target);
            let minus = loss_only(&perturbed(&params, index, -h), state, action, target);
            let fd = (plus - minus) / (2.0 * h);
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    assert!(worst <= 1e-4, "worst relative gradient error {worst}");
}
