//! Network model: episode node populations, per-step mobility, and the
//! directed disk-connectivity graph induced by transmission radii.
//!
//! A node `j` can receive from node `i` when `dist(i, j) <= radius_i`
//! (boundary inclusive). Senders are sources and relays; receivers are
//! relays and terminals.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use thiserror::Error;

use crate::config::ExperimentConfig;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("fixed {kind:?} node {id} at ({x}, {y}) falls outside the region")]
    FixedNodeOutsideRegion {
        id: usize,
        kind: NodeKind,
        x: f64,
        y: f64,
    },
    #[error("node {0} is not a relay")]
    NotARelay(usize),
}

/// Bounded rectangular region, `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub width: f64,
    pub height: f64,
}

impl RegionSpec {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Relay,
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    /// Current transmission radius. Sources hold the maximum for the whole
    /// episode, terminals never transmit, relays adjust theirs per step.
    pub radius: f64,
}

impl Node {
    pub fn dist2_to(&self, other: &Node) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// One episode's node population. Node ids are indices into `nodes`:
/// sources first, then terminals, then relays, so the fixed nodes keep
/// stable ids across episodes while the relay count varies.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub region: RegionSpec,
    pub nodes: Vec<Node>,
    pub source_ids: Vec<usize>,
    pub relay_ids: Vec<usize>,
    /// Terminal ids per source, aligned with `source_ids`.
    pub terminal_map: Vec<Vec<usize>>,
}

impl Network {
    pub fn relay_count(&self) -> usize {
        self.relay_ids.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal_map.iter().map(Vec::len).sum()
    }

    /// All (source, terminal) delivery pairs in declaration order.
    pub fn flows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (h, &src) in self.source_ids.iter().enumerate() {
            for &t in &self.terminal_map[h] {
                out.push((src, t));
            }
        }
        out
    }

    pub fn relay_radii(&self) -> Vec<f64> {
        self.relay_ids.iter().map(|&id| self.nodes[id].radius).collect()
    }
}

/// Per-step relay motion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilityModel {
    /// A fresh uniform position per relay per step.
    UniformRedraw,
    /// Gaussian displacement with reflection at the region boundary;
    /// `sigma` is in length units. `sigma = 0` leaves positions untouched.
    RandomWalk { sigma: f64 },
}

/// Directed connectivity at one time step. Edges are sorted by (sender,
/// receiver) so equal snapshots compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySnapshot {
    pub step: usize,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl TopologySnapshot {
    /// Out-neighbor lists indexed by node id.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
        }
        adj
    }
}

/// Sample one episode population: sources and terminals at their fixed
/// positions, a Poisson-sampled relay count with uniform positions, all
/// relay radii zero, source radii at the maximum.
pub fn generate_episode<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<Network, NetError> {
    let region = config.region;
    let n_sources = config.num_sources;
    let n_terminals = config.num_sources * config.terminals_per_source;
    let mut nodes = Vec::with_capacity(n_sources + n_terminals);

    let source_x = config.source_x_frac * region.width;
    let mut source_ids = Vec::with_capacity(n_sources);
    for h in 0..n_sources {
        let y = region.height * (h + 1) as f64 / (n_sources + 1) as f64;
        let id = nodes.len();
        if !region.contains(source_x, y) {
            return Err(NetError::FixedNodeOutsideRegion {
                id,
                kind: NodeKind::Source,
                x: source_x,
                y,
            });
        }
        source_ids.push(id);
        nodes.push(Node {
            id,
            kind: NodeKind::Source,
            x: source_x,
            y,
            radius: config.delta_max,
        });
    }

    let terminal_x = config.terminal_x_frac * region.width;
    let mut terminal_map = vec![Vec::with_capacity(config.terminals_per_source); n_sources];
    for t in 0..n_terminals {
        let y = region.height * (t + 1) as f64 / (n_terminals + 1) as f64;
        let id = nodes.len();
        if !region.contains(terminal_x, y) {
            return Err(NetError::FixedNodeOutsideRegion {
                id,
                kind: NodeKind::Terminal,
                x: terminal_x,
                y,
            });
        }
        terminal_map[t / config.terminals_per_source].push(id);
        nodes.push(Node {
            id,
            kind: NodeKind::Terminal,
            x: terminal_x,
            y,
            radius: 0.0,
        });
    }

    let lambda = config.density * region.area();
    let relay_count = if lambda > 0.0 {
        let dist = Poisson::new(lambda).expect("positive finite lambda");
        dist.sample(rng) as usize
    } else {
        0
    };
    let mut relay_ids = Vec::with_capacity(relay_count);
    for _ in 0..relay_count {
        let id = nodes.len();
        relay_ids.push(id);
        nodes.push(Node {
            id,
            kind: NodeKind::Relay,
            x: rng.gen_range(0.0..region.width),
            y: rng.gen_range(0.0..region.height),
            radius: 0.0,
        });
    }

    Ok(Network {
        region,
        nodes,
        source_ids,
        relay_ids,
        terminal_map,
    })
}

/// Move every relay according to the mobility model. Sources and terminals
/// stay put; kinds and radii are untouched. Relays are visited in id order
/// and always consume exactly two draws, so the stream stays aligned.
pub fn relocate<R: Rng + ?Sized>(network: &mut Network, mobility: &MobilityModel, rng: &mut R) {
    let width = network.region.width;
    let height = network.region.height;
    for node in &mut network.nodes {
        if node.kind != NodeKind::Relay {
            continue;
        }
        match *mobility {
            MobilityModel::UniformRedraw => {
                node.x = rng.gen_range(0.0..width);
                node.y = rng.gen_range(0.0..height);
            }
            MobilityModel::RandomWalk { sigma } => {
                let zx: f64 = StandardNormal.sample(rng);
                let zy: f64 = StandardNormal.sample(rng);
                node.x = reflect_into(node.x + zx * sigma, width);
                node.y = reflect_into(node.y + zy * sigma, height);
            }
        }
    }
}

/// Fold a coordinate back into `[0, limit]` by reflecting at the borders.
fn reflect_into(x: f64, limit: f64) -> f64 {
    let m = x.rem_euclid(2.0 * limit);
    if m <= limit {
        m
    } else {
        2.0 * limit - m
    }
}

/// Build the directed connectivity graph for the current radii.
///
/// Receivers are bucketed on a uniform grid so each sender only scans the
/// cells its disk can reach; the result is identical to the full pair scan.
pub fn build_graph(network: &Network, step: usize) -> TopologySnapshot {
    let nodes = &network.nodes;
    let region = network.region;
    let max_radius = nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Source | NodeKind::Relay))
        .map(|n| n.radius)
        .fold(0.0_f64, f64::max);

    // Cell size near the largest radius keeps candidate scans short; the
    // clamp bounds the grid for tiny radii.
    let cell_target = max_radius.max(1e-12);
    let cols = ((region.width / cell_target).ceil() as usize).clamp(1, 256);
    let rows = ((region.height / cell_target).ceil() as usize).clamp(1, 256);
    let cell_w = region.width / cols as f64;
    let cell_h = region.height / rows as f64;
    let col_of = |x: f64| (((x / cell_w) as isize).max(0) as usize).min(cols - 1);
    let row_of = |y: f64| (((y / cell_h) as isize).max(0) as usize).min(rows - 1);

    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); cols * rows];
    for node in nodes {
        if matches!(node.kind, NodeKind::Relay | NodeKind::Terminal) {
            cells[row_of(node.y) * cols + col_of(node.x)].push(node.id);
        }
    }

    let mut edges = Vec::new();
    for sender in nodes {
        if !matches!(sender.kind, NodeKind::Source | NodeKind::Relay) {
            continue;
        }
        let r = sender.radius;
        let r2 = r * r;
        let c_lo = col_of(sender.x - r);
        let c_hi = col_of(sender.x + r);
        let r_lo = row_of(sender.y - r);
        let r_hi = row_of(sender.y + r);
        for cy in r_lo..=r_hi {
            for cx in c_lo..=c_hi {
                for &j in &cells[cy * cols + cx] {
                    if j != sender.id && sender.dist2_to(&nodes[j]) <= r2 {
                        edges.push((sender.id, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();

    TopologySnapshot {
        step,
        num_nodes: nodes.len(),
        edges,
    }
}

/// Number of nodes a relay sees in its own transmission range, itself
/// included: `1 + |{j != i : dist <= radius_i, j a relay or terminal}|`.
/// The result is always in `[1, relays + terminals]`.
pub fn observe_state(node_id: usize, network: &Network) -> Result<usize, NetError> {
    let node = &network.nodes[node_id];
    if node.kind != NodeKind::Relay {
        return Err(NetError::NotARelay(node_id));
    }
    let r2 = node.radius * node.radius;
    let mut count = 1usize;
    for other in &network.nodes {
        if other.id != node_id
            && matches!(other.kind, NodeKind::Relay | NodeKind::Terminal)
            && node.dist2_to(other) <= r2
        {
            count += 1;
        }
    }
    Ok(count)
}

/// Apply a radius delta, clamped to `[0, delta_max]`. Negative actions at
/// zero and positive actions at the maximum are no-ops.
pub fn apply_action(radius: f64, action: f64, delta_max: f64) -> f64 {
    (radius + action).clamp(0.0, delta_max)
}
