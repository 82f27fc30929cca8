//! Experiment configuration: region profile, node population, learning
//! hyperparameters, mobility, policy, and seeding.

use thiserror::Error;

use crate::agent::{EpsilonSchedule, RewardParams};
use crate::net::{MobilityModel, RegionSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{field} = {value} out of range [{min}, {max}]")]
    OutOfRange {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{field}: {detail}")]
    Invalid { field: &'static str, detail: String },
    #[error("region is missing or degenerate: width and height must be positive and finite")]
    MissingRegion,
}

/// How relay radii are driven each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Per-relay DDQN agents with the epsilon-greedy schedule.
    Learned,
    /// Uniformly random actions every step (epsilon pinned to 1); the
    /// agents still train, but the learned Q-values never drive behavior.
    Random,
    /// All relay radii pinned at the maximum; a connectivity upper bound,
    /// no learning involved.
    AlwaysMax,
}

/// Whether actions are applied before or after the per-step relocation.
/// Because states are observed only after the throughput measurement,
/// which itself follows both phases, the two orders produce identical
/// traces; the knob exists to make that reading explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOrder {
    ActThenMove,
    MoveThenAct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityKind {
    /// Gaussian displacement with boundary reflection.
    RandomWalk,
    /// A fresh uniform position for every relay every step.
    UniformRedraw,
}

/// Full description of one experiment.
///
/// Positions are expressed in abstract distance units. The default profile
/// uses a 55 x 55 region with the relay density chosen for an expected
/// relay count of 80 and a maximum radius of 15 units; at that scale the
/// exploration phase reaches connecting radii, so multi-hop paths actually
/// form and the throughput feedback is live. `paper_literal()` instead
/// keeps the literal constants (100 x 100 region, density 8e-3, maximum
/// radius 3.0), which is far too sparse to connect but useful for
/// comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Bounded region the nodes live in.
    pub region: RegionSpec,
    /// Relay density in nodes per square unit; the relay count of an
    /// episode is Poisson with mean density x area.
    pub density: f64,
    /// Largest transmission radius any node may use.
    pub delta_max: f64,
    /// Number of source nodes.
    pub num_sources: usize,
    /// Terminals per source; every (source, terminal) pair is one flow.
    pub terminals_per_source: usize,
    /// Source x position as a fraction of region width.
    pub source_x_frac: f64,
    /// Terminal x position as a fraction of region width.
    pub terminal_x_frac: f64,
    /// Steps per episode.
    pub horizon: usize,
    /// Episodes per experiment.
    pub episodes: usize,
    /// Discount factor for the TD target.
    pub gamma: f64,
    pub reward: RewardParams,
    pub epsilon: EpsilonSchedule,
    /// Online-to-target parameter copy interval, in training steps.
    pub sync_interval: u64,
    /// RMSProp learning rate.
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    /// Hidden-layer width of each agent's Q-network.
    pub hidden_size: usize,
    /// Raw state counts are divided by this before entering the network.
    pub state_divisor: f64,
    pub mobility: MobilityKind,
    /// Random-walk step sigma as a fraction of region width.
    pub mobility_sigma_frac: f64,
    pub step_order: StepOrder,
    pub policy: PolicyKind,
    /// Per-link data rate credited to a connected flow.
    pub link_throughput_mbps: f64,
    /// Path-loss scale: transmit power in mW is eta * radius^alpha.
    pub path_loss_eta: f64,
    pub path_loss_alpha: f64,
    pub master_seed: u64,
    /// Worker threads for the per-agent phases. Results are identical for
    /// any value.
    pub threads: usize,
    /// Keep per-step node/topology snapshots in the trace.
    pub record_snapshots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            region: RegionSpec {
                width: 55.0,
                height: 55.0,
            },
            density: 80.0 / (55.0 * 55.0),
            delta_max: 15.0,
            num_sources: 2,
            terminals_per_source: 1,
            source_x_frac: 0.05,
            terminal_x_frac: 0.95,
            horizon: 150,
            episodes: 20,
            gamma: 0.7,
            reward: RewardParams::default(),
            epsilon: EpsilonSchedule::default(),
            sync_interval: 100,
            learning_rate: 0.01,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            hidden_size: 32,
            state_divisor: 100.0,
            mobility: MobilityKind::RandomWalk,
            mobility_sigma_frac: 0.01,
            step_order: StepOrder::ActThenMove,
            policy: PolicyKind::Learned,
            link_throughput_mbps: 910.0,
            path_loss_eta: 1.0,
            path_loss_alpha: 2.0,
            master_seed: 42,
            threads: 1,
            record_snapshots: false,
        }
    }
}

impl ExperimentConfig {
    /// The literal constant set: 100 x 100 region, density 8e-3, maximum
    /// radius 3.0. Far too sparse for reliable multi-hop formation (about
    /// 0.23 nodes per transmission disk), so expect near-zero throughput;
    /// the profile exists for literal comparisons.
    pub fn paper_literal() -> Self {
        Self {
            region: RegionSpec {
                width: 100.0,
                height: 100.0,
            },
            density: 8.0e-3,
            delta_max: 3.0,
            ..Self::default()
        }
    }

    pub fn total_flows(&self) -> usize {
        self.num_sources * self.terminals_per_source
    }

    /// Expected relay count, density x area.
    pub fn expected_relays(&self) -> f64 {
        self.density * self.region.area()
    }

    pub fn mobility_model(&self) -> MobilityModel {
        match self.mobility {
            MobilityKind::UniformRedraw => MobilityModel::UniformRedraw,
            MobilityKind::RandomWalk => MobilityModel::RandomWalk {
                sigma: self.mobility_sigma_frac * self.region.width,
            },
        }
    }

    /// Inclusive step window used for aggregate reporting, `[100, 150]`
    /// clamped to the horizon (the stretch after exploration has decayed).
    pub fn window(&self) -> (usize, usize) {
        (self.horizon.min(100), self.horizon.min(150))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.region.width) || !finite_pos(self.region.height) {
            return Err(ConfigError::MissingRegion);
        }
        if !self.density.is_finite() || self.density < 0.0 {
            return Err(ConfigError::Invalid {
                field: "density",
                detail: format!("must be finite and >= 0, got {}", self.density),
            });
        }
        if !finite_pos(self.delta_max) {
            return Err(ConfigError::Invalid {
                field: "delta_max",
                detail: format!("must be positive, got {}", self.delta_max),
            });
        }
        if self.num_sources < 1 {
            return Err(ConfigError::Invalid {
                field: "num_sources",
                detail: "at least one source is required".into(),
            });
        }
        if self.terminals_per_source < 1 {
            return Err(ConfigError::Invalid {
                field: "terminals_per_source",
                detail: "every source needs at least one terminal".into(),
            });
        }
        range(self.source_x_frac, "source_x_frac", 0.0, 1.0)?;
        range(self.terminal_x_frac, "terminal_x_frac", 0.0, 1.0)?;
        if self.horizon < 2 {
            return Err(ConfigError::Invalid {
                field: "horizon",
                detail: "the reward needs two throughput samples, so horizon >= 2".into(),
            });
        }
        if self.episodes < 1 {
            return Err(ConfigError::Invalid {
                field: "episodes",
                detail: "at least one episode is required".into(),
            });
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::OutOfRange {
                field: "gamma",
                value: self.gamma,
                min: 0.0,
                max: 1.0,
            });
        }
        range(self.reward.omega, "omega", 0.0, 1.0)?;
        if !self.reward.eta.is_finite() {
            return Err(ConfigError::Invalid {
                field: "eta",
                detail: "must be finite".into(),
            });
        }
        if !finite_pos(self.reward.reward_divisor) {
            return Err(ConfigError::Invalid {
                field: "reward_divisor",
                detail: "must be positive".into(),
            });
        }
        range(self.epsilon.start, "epsilon_start", 0.0, 1.0)?;
        range(self.epsilon.end, "epsilon_end", 0.0, 1.0)?;
        if self.epsilon.end > self.epsilon.start {
            return Err(ConfigError::Invalid {
                field: "epsilon_end",
                detail: "must not exceed epsilon_start".into(),
            });
        }
        if self.epsilon.decay_steps < 1 {
            return Err(ConfigError::Invalid {
                field: "epsilon_decay_steps",
                detail: "must be >= 1".into(),
            });
        }
        if self.sync_interval < 1 {
            return Err(ConfigError::Invalid {
                field: "target_sync_interval",
                detail: "must be >= 1".into(),
            });
        }
        if !finite_pos(self.learning_rate) {
            return Err(ConfigError::Invalid {
                field: "learning_rate",
                detail: "must be positive".into(),
            });
        }
        if !(self.rmsprop_decay >= 0.0 && self.rmsprop_decay < 1.0) {
            return Err(ConfigError::OutOfRange {
                field: "rmsprop_decay",
                value: self.rmsprop_decay,
                min: 0.0,
                max: 1.0,
            });
        }
        if !finite_pos(self.rmsprop_epsilon) {
            return Err(ConfigError::Invalid {
                field: "rmsprop_epsilon",
                detail: "must be positive".into(),
            });
        }
        if self.hidden_size < 1 {
            return Err(ConfigError::Invalid {
                field: "hidden_size",
                detail: "must be >= 1".into(),
            });
        }
        if !finite_pos(self.state_divisor) {
            return Err(ConfigError::Invalid {
                field: "state_divisor",
                detail: "must be positive".into(),
            });
        }
        if !self.mobility_sigma_frac.is_finite() || self.mobility_sigma_frac < 0.0 {
            return Err(ConfigError::Invalid {
                field: "mobility_sigma_frac",
                detail: "must be finite and >= 0".into(),
            });
        }
        if !finite_pos(self.link_throughput_mbps) {
            return Err(ConfigError::Invalid {
                field: "link_throughput_mbps",
                detail: "must be positive".into(),
            });
        }
        if !finite_pos(self.path_loss_eta) {
            return Err(ConfigError::Invalid {
                field: "path_loss_eta",
                detail: "must be positive".into(),
            });
        }
        if !finite_pos(self.path_loss_alpha) {
            return Err(ConfigError::Invalid {
                field: "path_loss_alpha",
                detail: "must be positive".into(),
            });
        }
        if self.threads < 1 {
            return Err(ConfigError::Invalid {
                field: "threads",
                detail: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

fn range(value: f64, field: &'static str, min: f64, max: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value,
            min,
            max,
        })
    }
}
