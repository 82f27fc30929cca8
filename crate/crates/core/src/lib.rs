//! Discrete-time simulator of multi-hop wireless ad hoc network formation.
//!
//! Source nodes deliver data to terminal nodes through a field of mobile
//! relay nodes. Every relay runs its own double deep Q-network and adjusts
//! its transmission radius each step to trade network throughput against
//! transmission power. The crate provides the network model, the per-step
//! performance metrics, the from-scratch Q-network, the per-relay agent,
//! and the episode/experiment engine with fully deterministic seeding.

pub mod agent;
pub mod config;
pub mod ddqn;
pub mod engine;
pub mod metrics;
pub mod net;
pub mod rng;
pub mod trace;

pub use agent::{Agent, ActionSet, EpsilonSchedule, RewardParams, RewardValue};
pub use config::{ConfigError, ExperimentConfig, MobilityKind, PolicyKind, StepOrder};
pub use ddqn::{argmax, init_params, loss_gradients, Ddqn, DdqnError, QNetParams, RmsPropState};
pub use engine::{run_episode, run_episode_with_agents, run_experiment, EngineError, ExperimentResult};
pub use metrics::{FlowResult, StepMetrics};
pub use net::{MobilityModel, NetError, Network, Node, NodeKind, RegionSpec, TopologySnapshot};
pub use trace::{AggregateReport, EpisodeTrace, SnapshotRecord, StepMean, StepRecord};
