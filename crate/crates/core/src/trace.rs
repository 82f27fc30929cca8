//! Trace records produced by the engine: per-step metrics and radii for
//! one episode, optional topology snapshots, and the cross-episode
//! aggregate report.

use crate::metrics::StepMetrics;
use crate::net::{Node, TopologySnapshot};

/// Everything recorded for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub metrics: StepMetrics,
    /// Relay radii after this step's actions, in relay order.
    pub radii: Vec<f64>,
    /// Mean DDQN training loss across relays this step (0 when nothing
    /// trains, e.g. the pinned-maximum baseline or a relay-free episode).
    pub mean_loss: f64,
}

/// Node positions plus the measured topology at one step, kept only when
/// snapshot recording is on.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub step: usize,
    pub nodes: Vec<Node>,
    pub topology: TopologySnapshot,
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// Position of this episode within its experiment.
    pub episode_index: usize,
    pub episode_seed: u64,
    pub relay_count: usize,
    /// The (source, terminal) pairs of this episode, fixed for its whole
    /// duration.
    pub flows: Vec<(usize, usize)>,
    /// One record per step; length equals the horizon.
    pub steps: Vec<StepRecord>,
    /// Relay radii after the final step.
    pub final_radii: Vec<f64>,
    pub snapshots: Option<Vec<SnapshotRecord>>,
}

/// Per-step means across the episodes of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMean {
    pub step: usize,
    pub goodput_mbps: f64,
    pub phi: f64,
    pub connectivity_ratio: f64,
    /// Mean relay power in mW averaged over episodes.
    pub mean_power_mw: f64,
    /// dBm of `mean_power_mw`.
    pub mean_power_dbm: f64,
}

/// Cross-episode summary. Window means average over the inclusive step
/// window and over episodes; power averages in mW first and converts to
/// dBm once.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub episodes: usize,
    /// Inclusive 1-based step window the summary means cover.
    pub window: (usize, usize),
    pub window_connectivity: f64,
    pub window_goodput_mbps: f64,
    pub window_power_dbm: f64,
    pub per_step: Vec<StepMean>,
}
