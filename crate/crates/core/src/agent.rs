//! One relay node's decision cycle: epsilon-greedy action selection,
//! reward computation, and the per-step DDQN training call.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ddqn::{argmax, Ddqn, DdqnError};

/// The ordered radius-delta menu, 21 values from -1.0 to +1.0 in steps
/// of 0.1, symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    deltas: Vec<f64>,
}

impl ActionSet {
    pub fn standard() -> Self {
        Self {
            deltas: (0..21).map(|k| (k as f64 - 10.0) / 10.0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn delta(&self, index: usize) -> f64 {
        self.deltas[index]
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// Index of the no-op (zero) delta.
    pub fn zero_index(&self) -> usize {
        self.deltas.len() / 2
    }
}

/// Constants of the per-step reward
/// `raw = offset + omega * eta * (phi_prev - phi_prev2) - (1 - omega) * action`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardParams {
    /// Additive offset keeping the reward non-negative over the normal
    /// operating envelope.
    pub offset: f64,
    /// Weight trading throughput improvement against action cost, in [0, 1].
    pub omega: f64,
    /// Scale matching the throughput-difference range to the action range.
    pub eta: f64,
    /// The raw reward is divided by this before entering the TD update.
    pub reward_divisor: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            offset: 5.0,
            omega: 0.8,
            eta: 20.0,
            reward_divisor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardValue {
    pub raw: f64,
    pub scaled: f64,
}

/// Evaluate the reward for the previous step's action given the last two
/// broadcast throughput values. The action enters with its chosen (pre-
/// clamp) value even when clamping made it a no-op.
pub fn compute_reward(
    params: &RewardParams,
    phi_prev: f64,
    phi_prev2: f64,
    prev_action: f64,
) -> RewardValue {
    let raw = params.offset + params.omega * params.eta * (phi_prev - phi_prev2)
        - (1.0 - params.omega) * prev_action;
    RewardValue {
        raw,
        scaled: raw / params.reward_divisor,
    }
}

/// Linear exploration decay: 1.0 down to 0.01 over the first 100 steps by
/// default, then flat.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u32,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.01,
            decay_steps: 100,
        }
    }
}

impl EpsilonSchedule {
    /// Exploration rate at a 1-based step index.
    pub fn epsilon(&self, step: usize) -> f64 {
        let progress = (step.saturating_sub(1) as f64 / self.decay_steps as f64).min(1.0);
        self.start * (1.0 - progress) + self.end * progress
    }
}

/// One relay agent: its radius, the last observation and action, its DDQN,
/// and a private exploration stream. Everything here is local to the node;
/// the only cross-node input is the broadcast throughput fed to `update`.
#[derive(Debug, Clone)]
pub struct Agent {
    pub node_id: usize,
    pub radius: f64,
    pub ddqn: Ddqn,
    prev_state: usize,
    prev_action_index: usize,
    last_explored: bool,
    rng: ChaCha8Rng,
    actions: ActionSet,
    reward_params: RewardParams,
    state_divisor: f64,
}

impl Agent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        node_id: usize,
        ddqn: Ddqn,
        rng: ChaCha8Rng,
        actions: ActionSet,
        reward_params: RewardParams,
        state_divisor: f64,
        initial_state: usize,
    ) -> Self {
        let zero = actions.zero_index();
        Self {
            node_id,
            radius: 0.0,
            ddqn,
            prev_state: initial_state,
            prev_action_index: zero,
            last_explored: false,
            rng,
            actions,
            reward_params,
            state_divisor,
        }
    }

    pub fn prev_state(&self) -> usize {
        self.prev_state
    }

    /// Delta of the most recently chosen action.
    pub fn prev_action(&self) -> f64 {
        self.actions.delta(self.prev_action_index)
    }

    pub fn prev_action_index(&self) -> usize {
        self.prev_action_index
    }

    /// Whether the last `get_action` call explored rather than exploited.
    pub fn last_explored(&self) -> bool {
        self.last_explored
    }

    fn scaled(&self, state: usize) -> f64 {
        state as f64 / self.state_divisor
    }

    /// Epsilon-greedy selection: draw `p ~ U(0, 1)` and explore uniformly
    /// over the action set iff `p < epsilon`, otherwise take the argmax of
    /// the online Q-values (ties toward the lowest index). The chosen
    /// action is recorded for the next `update`.
    pub fn get_action(&mut self, state: usize, epsilon: f64) -> f64 {
        let p: f64 = self.rng.gen();
        let (index, explored) = if p < epsilon {
            (self.rng.gen_range(0..self.actions.len()), true)
        } else {
            let q = self.ddqn.online.forward(self.scaled(state));
            (argmax(&q), false)
        };
        self.prev_action_index = index;
        self.last_explored = explored;
        self.actions.delta(index)
    }

    /// Reward the previous action from the broadcast throughput pair and
    /// train on the transition (prev_state, prev_action, new_state), then
    /// store `new_state` as the current observation.
    pub fn update(
        &mut self,
        new_state: usize,
        phi_prev: f64,
        phi_prev2: f64,
        gamma: f64,
    ) -> Result<f64, DdqnError> {
        let reward = compute_reward(&self.reward_params, phi_prev, phi_prev2, self.prev_action());
        let loss = self.ddqn.train_step(
            self.scaled(self.prev_state),
            self.prev_action_index,
            reward.scaled,
            self.scaled(new_state),
            gamma,
        )?;
        self.prev_state = new_state;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddqn::QNetParams;
    use crate::rng::derive_stream;

    fn test_agent(seed: u64) -> Agent {
        let mut init = derive_stream(seed, "agent-init", 0);
        let ddqn = Ddqn::new(32, 21, 0.01, 0.9, 1e-8, 100, &mut init);
        Agent::new(
            7,
            ddqn,
            derive_stream(seed, "agent-explore", 0),
            ActionSet::standard(),
            RewardParams::default(),
            100.0,
            1,
        )
    }

    #[test]
    fn action_set_is_symmetric_with_21_steps() {
        let a = ActionSet::standard();
        assert_eq!(a.len(), 21);
        assert_eq!(a.delta(0), -1.0);
        assert_eq!(a.delta(20), 1.0);
        assert_eq!(a.delta(a.zero_index()), 0.0);
        for i in 0..21 {
            assert_eq!(a.delta(i), -a.delta(20 - i));
        }
        for w in a.deltas().windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_schedule_endpoints_and_midpoint() {
        let e = EpsilonSchedule::default();
        assert_eq!(e.epsilon(1), 1.0);
        assert!((e.epsilon(50) - 0.5149).abs() < 1e-12);
        assert_eq!(e.epsilon(101), 0.01);
        assert_eq!(e.epsilon(102), 0.01);
        assert_eq!(e.epsilon(100_000), 0.01);
        // linear in between: equal spacing of consecutive values
        let d1 = e.epsilon(10) - e.epsilon(11);
        let d2 = e.epsilon(80) - e.epsilon(81);
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn reward_matches_hand_evaluations() {
        let p = RewardParams::default();
        let a = compute_reward(&p, 0.3, 0.3, 0.0);
        assert!((a.raw - 5.0).abs() < 5.0 * 1e-12);
        assert!((a.scaled - 0.5).abs() < 0.5 * 1e-12);
        let b = compute_reward(&p, 0.2, 0.1, 0.5);
        assert!((b.raw - 6.5).abs() < 6.5 * 1e-12);
        let c = compute_reward(&p, 0.05, 0.1, -1.0);
        assert!((c.raw - 4.4).abs() < 4.4 * 1e-12);
    }

    #[test]
    fn reward_slopes_in_throughput_and_action() {
        let p = RewardParams::default();
        let slope_phi =
            compute_reward(&p, 1.0, 0.0, 0.0).raw - compute_reward(&p, 0.0, 0.0, 0.0).raw;
        assert!((slope_phi - 16.0).abs() < 1e-12);
        let slope_action =
            compute_reward(&p, 0.0, 0.0, 1.0).raw - compute_reward(&p, 0.0, 0.0, 0.0).raw;
        assert!((slope_action + 0.2).abs() < 1e-12);
    }

    #[test]
    fn reward_non_negative_over_operating_envelope() {
        let p = RewardParams::default();
        // worst case inside the envelope: most negative throughput delta
        // combined with the most expensive action
        assert!(compute_reward(&p, 0.0, 0.2625, 1.0).raw >= 0.0);
        for i in 0..100 {
            let dphi = -0.2625 + i as f64 * 0.01;
            for a in [-1.0, -0.3, 0.0, 0.4, 1.0] {
                assert!(compute_reward(&p, dphi, 0.0, a).raw >= 0.0, "dphi {dphi} a {a}");
            }
        }
    }

    #[test]
    fn get_action_pure_exploitation_returns_crafted_argmax() {
        let mut agent = test_agent(1);
        agent.ddqn.online = QNetParams::zeros(1, 21);
        agent.ddqn.online.b2[20] = 3.0;
        for _ in 0..50 {
            assert_eq!(agent.get_action(5, 0.0), 1.0);
            assert!(!agent.last_explored());
        }
    }

    #[test]
    fn get_action_breaks_q_ties_toward_lowest_index() {
        let mut agent = test_agent(2);
        agent.ddqn.online = QNetParams::zeros(1, 21);
        agent.ddqn.online.b2[4] = 2.0;
        agent.ddqn.online.b2[9] = 2.0;
        let delta = agent.get_action(5, 0.0);
        assert_eq!(delta, ActionSet::standard().delta(4));
        assert_eq!(agent.prev_action_index(), 4);
    }

    #[test]
    fn get_action_with_epsilon_one_is_uniform() {
        // chi-squared goodness of fit over 10,000 forced-exploration draws
        let mut agent = test_agent(3);
        let mut counts = [0u32; 21];
        for _ in 0..10_000 {
            let d = agent.get_action(5, 1.0);
            assert!(agent.last_explored());
            let idx = agent.prev_action_index();
            assert_eq!(d, ActionSet::standard().delta(idx));
            counts[idx] += 1;
        }
        let expected = 10_000.0 / 21.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 99.9th percentile of chi-squared with 20 degrees of freedom
        assert!(chi2 < 45.31, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn exploration_fraction_matches_epsilon() {
        for (seed, eps) in [(4u64, 0.3), (5, 0.75), (6, 0.05)] {
            let mut agent = test_agent(seed);
            let n = 10_000;
            let explored = (0..n)
                .filter(|_| {
                    agent.get_action(5, eps);
                    agent.last_explored()
                })
                .count() as f64;
            let fraction = explored / n as f64;
            let bound = 3.0 * (eps * (1.0 - eps) / n as f64).sqrt();
            assert!(
                (fraction - eps).abs() <= bound,
                "eps {eps}: fraction {fraction} outside {bound}"
            );
        }
    }

    #[test]
    fn recorded_action_equals_returned_action() {
        let mut agent = test_agent(7);
        for step in 1..=200 {
            let eps = EpsilonSchedule::default().epsilon(step);
            let d = agent.get_action(3, eps);
            assert_eq!(d, agent.prev_action());
        }
    }

    #[test]
    fn update_trains_on_previous_transition_and_stores_state() {
        let mut agent = test_agent(8);
        let s0 = agent.prev_state();
        assert_eq!(s0, 1);
        agent.get_action(s0, 0.0);
        let loss = agent.update(4, 0.1, 0.0, 0.7).unwrap();
        assert!(loss.is_finite());
        assert_eq!(agent.prev_state(), 4);
        assert_eq!(agent.ddqn.update_count, 1);
    }

    #[test]
    fn first_update_uses_zero_throughput_placeholder() {
        // phi_prev2 = 0 on the first learnable step: reward reduces to
        // offset + omega * eta * phi_1 - (1 - omega) * a
        let p = RewardParams::default();
        let r = compute_reward(&p, 0.25, 0.0, 0.1);
        assert!((r.raw - (5.0 + 16.0 * 0.25 - 0.2 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn repeated_identical_updates_mostly_reduce_loss() {
        // Empirical descent property: training twice on one frozen
        // transition should not increase the loss in at least 95% of
        // random trials.
        let mut non_increasing = 0u32;
        let trials = 1_000;
        for trial in 0..trials {
            let mut agent = test_agent(1000 + trial as u64);
            agent.prev_state = 5;
            agent.get_action(5, 1.0);
            let phi_prev = (trial % 17) as f64 / 17.0;
            let phi_prev2 = (trial % 11) as f64 / 11.0;
            let first = agent.update(6, phi_prev, phi_prev2, 0.7).unwrap();
            // rewind the stored observation so the second call replays the
            // exact same transition
            agent.prev_state = 5;
            let second = agent.update(6, phi_prev, phi_prev2, 0.7).unwrap();
            if second <= first {
                non_increasing += 1;
            }
        }
        assert!(
            non_increasing as f64 >= 0.95 * trials as f64,
            "descent held in only {non_increasing}/{trials} trials"
        );
    }
}
