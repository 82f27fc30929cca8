//! Episode and experiment orchestration.
//!
//! Each step runs the same cycle for every relay: select an action from
//! the stored observation, apply the radius delta, relocate, rebuild the
//! connectivity graph, broadcast the measured throughput, then let every
//! relay observe its new state and train on the completed transition. The
//! broadcast throughput is the only cross-node value an agent ever
//! consumes.
//!
//! All randomness comes from per-purpose streams derived from the episode
//! seed, and per-agent work writes only agent-local state, so traces are
//! identical for any worker-thread count and any agent visit order.

use rayon::prelude::*;
use thiserror::Error;

use crate::agent::{ActionSet, Agent};
use crate::config::{ConfigError, ExperimentConfig, PolicyKind, StepOrder};
use crate::ddqn::{Ddqn, DdqnError};
use crate::metrics::{dbm_from_mw, step_metrics};
use crate::net::{self, NetError, NodeKind};
use crate::rng;
use crate::trace::{AggregateReport, EpisodeTrace, SnapshotRecord, StepMean, StepRecord};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("agent at node {node_id}: {source}")]
    Agent { node_id: usize, source: DdqnError },
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

/// Report plus the raw per-episode traces it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub report: AggregateReport,
    pub traces: Vec<EpisodeTrace>,
}

#[derive(Clone, Copy)]
enum AgentOrder {
    Parallel,
    SerialForward,
    SerialReverse,
}

/// Seed for episode `index` of an experiment.
pub fn episode_seed(master_seed: u64, index: usize) -> u64 {
    rng::derive_seed(master_seed, "episode", index as u64)
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool, EngineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))
}

/// Run a single episode.
pub fn run_episode(config: &ExperimentConfig, episode_seed: u64) -> Result<EpisodeTrace, EngineError> {
    run_episode_with_agents(config, episode_seed).map(|(trace, _)| trace)
}

/// Run a single episode and keep the trained agents (for checkpoint
/// export).
pub fn run_episode_with_agents(
    config: &ExperimentConfig,
    episode_seed: u64,
) -> Result<(EpisodeTrace, Vec<Agent>), EngineError> {
    config.validate()?;
    let pool = build_pool(config.threads)?;
    pool.install(|| run_episode_inner(config, episode_seed, AgentOrder::Parallel))
}

/// Serial single-threaded episode with a forced agent visit order; used to
/// verify that agents never read each other's state. Produces the same
/// trace as `run_episode` by construction.
#[doc(hidden)]
pub fn run_episode_serial(
    config: &ExperimentConfig,
    episode_seed: u64,
    reverse: bool,
) -> Result<EpisodeTrace, EngineError> {
    config.validate()?;
    let order = if reverse {
        AgentOrder::SerialReverse
    } else {
        AgentOrder::SerialForward
    };
    run_episode_inner(config, episode_seed, order).map(|(trace, _)| trace)
}

/// Run all configured episodes with per-episode seeds derived from the
/// master seed, and aggregate.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, EngineError> {
    config.validate()?;
    let pool = build_pool(config.threads)?;
    let traces = pool.install(|| -> Result<Vec<EpisodeTrace>, EngineError> {
        (0..config.episodes)
            .map(|index| {
                let seed = episode_seed(config.master_seed, index);
                let (mut trace, _) = run_episode_inner(config, seed, AgentOrder::Parallel)?;
                trace.episode_index = index;
                Ok(trace)
            })
            .collect()
    })?;
    let report = aggregate(config, &traces);
    Ok(ExperimentResult { report, traces })
}

fn run_episode_inner(
    config: &ExperimentConfig,
    episode_seed: u64,
    order: AgentOrder,
) -> Result<(EpisodeTrace, Vec<Agent>), EngineError> {
    let mut placement_rng = rng::derive_stream(episode_seed, "placement", 0);
    let mut network = net::generate_episode(config, &mut placement_rng)?;
    let mut mobility_rng = rng::derive_stream(episode_seed, "mobility", 0);
    let mobility = config.mobility_model();
    let actions = ActionSet::standard();
    let learning = config.policy != PolicyKind::AlwaysMax;

    let mut agents: Vec<Agent> = Vec::new();
    if learning {
        agents.reserve(network.relay_count());
        for (ordinal, &node_id) in network.relay_ids.iter().enumerate() {
            let mut init_rng = rng::derive_stream(episode_seed, "agent-init", ordinal as u64);
            let ddqn = Ddqn::new(
                config.hidden_size,
                actions.len(),
                config.learning_rate,
                config.rmsprop_decay,
                config.rmsprop_epsilon,
                config.sync_interval,
                &mut init_rng,
            );
            let explore_rng = rng::derive_stream(episode_seed, "agent-explore", ordinal as u64);
            let initial_state = net::observe_state(node_id, &network)?;
            agents.push(Agent::new(
                node_id,
                ddqn,
                explore_rng,
                actions.clone(),
                config.reward.clone(),
                config.state_divisor,
                initial_state,
            ));
        }
    }

    let horizon = config.horizon;
    // phi_history[t] is the broadcast throughput of step t; index 0 holds
    // the zero placeholder that backs the first learnable reward.
    let mut phi_history = Vec::with_capacity(horizon + 1);
    phi_history.push(0.0);
    let mut steps = Vec::with_capacity(horizon);
    let mut snapshots = config.record_snapshots.then(Vec::new);

    for step in 1..=horizon {
        let epsilon = match config.policy {
            PolicyKind::Learned => config.epsilon.epsilon(step),
            PolicyKind::Random => 1.0,
            PolicyKind::AlwaysMax => 0.0,
        };
        match config.step_order {
            StepOrder::ActThenMove => {
                select_and_apply(config, &mut agents, &mut network, epsilon, order);
                net::relocate(&mut network, &mobility, &mut mobility_rng);
            }
            StepOrder::MoveThenAct => {
                net::relocate(&mut network, &mobility, &mut mobility_rng);
                select_and_apply(config, &mut agents, &mut network, epsilon, order);
            }
        }

        let topology = net::build_graph(&network, step);
        let metrics = step_metrics(
            &topology,
            &network,
            config.link_throughput_mbps,
            config.path_loss_eta,
            config.path_loss_alpha,
        );
        phi_history.push(metrics.phi);

        let mean_loss = if learning && !agents.is_empty() {
            let phi_prev = phi_history[step];
            let phi_prev2 = phi_history[step - 1];
            let losses = update_agents(&mut agents, &network, phi_prev, phi_prev2, config.gamma, order)?;
            losses.iter().sum::<f64>() / losses.len() as f64
        } else {
            0.0
        };

        if let Some(records) = snapshots.as_mut() {
            records.push(SnapshotRecord {
                step,
                nodes: network.nodes.clone(),
                topology: topology.clone(),
            });
        }
        steps.push(StepRecord {
            step,
            metrics,
            radii: network.relay_radii(),
            mean_loss,
        });
    }

    let final_radii = steps.last().map(|s| s.radii.clone()).unwrap_or_default();
    let trace = EpisodeTrace {
        episode_index: 0,
        episode_seed,
        relay_count: network.relay_count(),
        flows: network.flows(),
        steps,
        final_radii,
        snapshots,
    };
    Ok((trace, agents))
}

fn select_and_apply(
    config: &ExperimentConfig,
    agents: &mut [Agent],
    network: &mut crate::net::Network,
    epsilon: f64,
    order: AgentOrder,
) {
    if config.policy == PolicyKind::AlwaysMax {
        for node in &mut network.nodes {
            if node.kind == NodeKind::Relay {
                node.radius = config.delta_max;
            }
        }
        return;
    }
    let delta_max = config.delta_max;
    let act = |agent: &mut Agent| {
        let state = agent.prev_state();
        let delta = agent.get_action(state, epsilon);
        agent.radius = net::apply_action(agent.radius, delta, delta_max);
    };
    match order {
        AgentOrder::Parallel => agents.par_iter_mut().for_each(act),
        AgentOrder::SerialForward => agents.iter_mut().for_each(act),
        AgentOrder::SerialReverse => agents.iter_mut().rev().for_each(act),
    }
    for agent in agents.iter() {
        network.nodes[agent.node_id].radius = agent.radius;
    }
}

fn update_agents(
    agents: &mut [Agent],
    network: &crate::net::Network,
    phi_prev: f64,
    phi_prev2: f64,
    gamma: f64,
    order: AgentOrder,
) -> Result<Vec<f64>, EngineError> {
    let update_one = |agent: &mut Agent| -> Result<f64, EngineError> {
        let new_state = net::observe_state(agent.node_id, network)?;
        agent
            .update(new_state, phi_prev, phi_prev2, gamma)
            .map_err(|source| EngineError::Agent {
                node_id: agent.node_id,
                source,
            })
    };
    match order {
        AgentOrder::Parallel => agents.par_iter_mut().map(update_one).collect(),
        AgentOrder::SerialForward => agents.iter_mut().map(update_one).collect(),
        AgentOrder::SerialReverse => {
            // Visit in reverse but keep losses index-aligned so the mean
            // sums in the same order as the other modes.
            let mut losses = vec![0.0; agents.len()];
            for (i, agent) in agents.iter_mut().enumerate().rev() {
                losses[i] = update_one(agent)?;
            }
            Ok(losses)
        }
    }
}

/// Per-step means over episodes plus the window summary.
pub fn aggregate(config: &ExperimentConfig, traces: &[EpisodeTrace]) -> AggregateReport {
    let horizon = config.horizon;
    let window = config.window();
    let count = traces.len() as f64;

    let mut per_step = Vec::with_capacity(horizon);
    for step in 1..=horizon {
        let mut goodput = 0.0;
        let mut phi = 0.0;
        let mut connectivity = 0.0;
        let mut power_mw = 0.0;
        for trace in traces {
            let record = &trace.steps[step - 1];
            goodput += record.metrics.goodput_mbps;
            phi += record.metrics.phi;
            connectivity += record.metrics.connectivity_ratio;
            power_mw += record.metrics.mean_power_mw();
        }
        let mean_power_mw = power_mw / count;
        per_step.push(StepMean {
            step,
            goodput_mbps: goodput / count,
            phi: phi / count,
            connectivity_ratio: connectivity / count,
            mean_power_mw,
            mean_power_dbm: dbm_from_mw(mean_power_mw),
        });
    }

    let mut goodput = 0.0;
    let mut connectivity = 0.0;
    let mut power_mw = 0.0;
    let mut samples = 0.0;
    for trace in traces {
        for record in &trace.steps[window.0 - 1..window.1] {
            goodput += record.metrics.goodput_mbps;
            connectivity += record.metrics.connectivity_ratio;
            power_mw += record.metrics.mean_power_mw();
            samples += 1.0;
        }
    }
    AggregateReport {
        episodes: traces.len(),
        window,
        window_connectivity: connectivity / samples,
        window_goodput_mbps: goodput / samples,
        window_power_dbm: dbm_from_mw(power_mw / samples),
        per_step,
    }
}
