//! From-scratch feed-forward Q-network with RMSProp and a double-DQN
//! target: the online network picks the bootstrap action, the target
//! network evaluates it. One instance per relay agent.
//!
//! The network maps a scalar (the scaled state count) through one ReLU
//! hidden layer to a linear head with one Q-value per action. Training is
//! online, one transition per step, no replay buffer.

use std::io::{self, BufRead, Write};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DdqnError {
    #[error("non-finite {0} in training step")]
    NonFinite(&'static str),
    #[error("checkpoint parse error: {0}")]
    Checkpoint(String),
}

/// Parameters of the two-layer network, input dimension fixed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetParams {
    pub hidden: usize,
    pub out: usize,
    /// First-layer weights, length `hidden`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Second-layer weights, row-major `[out x hidden]`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl QNetParams {
    pub fn zeros(hidden: usize, out: usize) -> Self {
        Self {
            hidden,
            out,
            w1: vec![0.0; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; out * hidden],
            b2: vec![0.0; out],
        }
    }

    fn hidden_activations(&self, x: f64) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| (self.w1[j] * x + self.b1[j]).max(0.0))
            .collect()
    }

    fn output_unit(&self, h: &[f64], k: usize) -> f64 {
        let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
        let mut q = self.b2[k];
        for (w, hj) in row.iter().zip(h) {
            q += w * hj;
        }
        q
    }

    /// Q-values for every action: `w2 * relu(w1 * x + b1) + b2`.
    pub fn forward(&self, x: f64) -> Vec<f64> {
        let h = self.hidden_activations(x);
        (0..self.out).map(|k| self.output_unit(&h, k)).collect()
    }
}

/// Index of the largest value; ties break toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fresh parameters: weights uniform in the Glorot bound
/// `sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, hidden: usize, out: usize) -> QNetParams {
    let bound1 = (6.0 / (1.0 + hidden as f64)).sqrt();
    let bound2 = (6.0 / (hidden as f64 + out as f64)).sqrt();
    QNetParams {
        hidden,
        out,
        w1: (0..hidden).map(|_| rng.gen_range(-bound1..bound1)).collect(),
        b1: vec![0.0; hidden],
        w2: (0..out * hidden)
            .map(|_| rng.gen_range(-bound2..bound2))
            .collect(),
        b2: vec![0.0; out],
    }
}

/// Per-parameter squared-gradient accumulators plus the optimizer
/// constants. With a zero gradient the accumulators decay and the
/// parameters stay exactly unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub lr: f64,
    pub decay: f64,
    pub eps_stab: f64,
    acc_w1: Vec<f64>,
    acc_b1: Vec<f64>,
    acc_w2: Vec<f64>,
    acc_b2: Vec<f64>,
}

impl RmsPropState {
    pub fn new(lr: f64, decay: f64, eps_stab: f64, hidden: usize, out: usize) -> Self {
        Self {
            lr,
            decay,
            eps_stab,
            acc_w1: vec![0.0; hidden],
            acc_b1: vec![0.0; hidden],
            acc_w2: vec![0.0; out * hidden],
            acc_b2: vec![0.0; out],
        }
    }

    /// One RMSProp step; `grads` carries the gradient in parameter shape.
    fn apply(&mut self, params: &mut QNetParams, grads: &QNetParams) {
        step_tensor(&mut self.acc_w1, &mut params.w1, &grads.w1, self.lr, self.decay, self.eps_stab);
        step_tensor(&mut self.acc_b1, &mut params.b1, &grads.b1, self.lr, self.decay, self.eps_stab);
        step_tensor(&mut self.acc_w2, &mut params.w2, &grads.w2, self.lr, self.decay, self.eps_stab);
        step_tensor(&mut self.acc_b2, &mut params.b2, &grads.b2, self.lr, self.decay, self.eps_stab);
    }
}

fn step_tensor(acc: &mut [f64], params: &mut [f64], grads: &[f64], lr: f64, decay: f64, eps: f64) {
    for i in 0..params.len() {
        let g = grads[i];
        acc[i] = decay * acc[i] + (1.0 - decay) * g * g;
        params[i] -= lr * g / (acc[i].sqrt() + eps);
    }
}

/// Loss `(td_target - Q(s, a))^2` and its exact gradient with the target
/// held constant, returned in parameter shape. Only the selected output
/// unit carries gradient; hidden units cut by the ReLU contribute nothing.
pub fn loss_gradients(
    params: &QNetParams,
    scaled_state: f64,
    action_index: usize,
    td_target: f64,
) -> (f64, QNetParams) {
    let hidden = params.hidden;
    let h = params.hidden_activations(scaled_state);
    let q_a = params.output_unit(&h, action_index);
    let residual = q_a - td_target;
    let loss = residual * residual;

    let dq = 2.0 * residual;
    let mut grads = QNetParams::zeros(hidden, params.out);
    grads.b2[action_index] = dq;
    let row = action_index * hidden;
    for (j, &hj) in h.iter().enumerate() {
        grads.w2[row + j] = dq * hj;
        if hj > 0.0 {
            let dz = dq * params.w2[row + j];
            grads.b1[j] = dz;
            grads.w1[j] = dz * scaled_state;
        }
    }
    (loss, grads)
}

/// Online network, target network, optimizer state, and the sync counter.
/// The target is a past copy of the online parameters, refreshed every
/// `sync_interval` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Ddqn {
    pub online: QNetParams,
    pub target: QNetParams,
    pub optimizer: RmsPropState,
    pub update_count: u64,
    pub sync_interval: u64,
}

impl Ddqn {
    pub fn new<R: Rng + ?Sized>(
        hidden: usize,
        out: usize,
        lr: f64,
        decay: f64,
        eps_stab: f64,
        sync_interval: u64,
        rng: &mut R,
    ) -> Self {
        let online = init_params(rng, hidden, out);
        Self {
            target: online.clone(),
            optimizer: RmsPropState::new(lr, decay, eps_stab, hidden, out),
            online,
            update_count: 0,
            sync_interval,
        }
    }

    /// Double-DQN bootstrap: `r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
    pub fn td_target(&self, reward_scaled: f64, gamma: f64, next_scaled_state: f64) -> f64 {
        let q_online = self.online.forward(next_scaled_state);
        let selected = argmax(&q_online);
        let h = self.target.hidden_activations(next_scaled_state);
        reward_scaled + gamma * self.target.output_unit(&h, selected)
    }

    /// One online training step on a single transition.
    ///
    /// Minimizes `(td_target - Q_online(s, a))^2`, backpropagating through
    /// the selected output unit only, then applies one RMSProp update and
    /// copies online to target when the update count hits the sync
    /// interval. Returns the loss before the update.
    pub fn train_step(
        &mut self,
        scaled_state: f64,
        action_index: usize,
        reward_scaled: f64,
        next_scaled_state: f64,
        gamma: f64,
    ) -> Result<f64, DdqnError> {
        assert!(action_index < self.online.out, "action index out of range");
        let y = self.td_target(reward_scaled, gamma, next_scaled_state);
        let (loss, grads) = loss_gradients(&self.online, scaled_state, action_index, y);
        if !loss.is_finite() {
            return Err(DdqnError::NonFinite("loss"));
        }
        let row = action_index * self.online.hidden;
        if grads.w1.iter().any(|g| !g.is_finite())
            || grads.w2[row..row + self.online.hidden].iter().any(|g| !g.is_finite())
            || !grads.b2[action_index].is_finite()
        {
            return Err(DdqnError::NonFinite("gradient"));
        }

        self.optimizer.apply(&mut self.online, &grads);
        self.update_count += 1;
        if self.update_count.is_multiple_of(self.sync_interval) {
            self.target = self.online.clone();
        }
        Ok(loss)
    }
}

// --- Checkpoint format ------------------------------------------------
//
// Textual dump with a shape header and one hex-encoded f64 bit pattern per
// line, so a round trip is bit-exact:
//
//   ddqn-checkpoint v1
//   hidden 32
//   out 21
//   sync_interval 100
//   update_count 37
//   scalar lr 3F847AE147AE147B
//   scalar decay ...
//   scalar eps_stab ...
//   tensor online.w1 32
//   BFD23C0A...
//   ...

const TENSOR_NAMES: [&str; 12] = [
    "online.w1", "online.b1", "online.w2", "online.b2",
    "target.w1", "target.b1", "target.w2", "target.b2",
    "acc.w1", "acc.b1", "acc.w2", "acc.b2",
];

pub fn write_checkpoint<W: Write>(ddqn: &Ddqn, w: &mut W) -> io::Result<()> {
    writeln!(w, "ddqn-checkpoint v1")?;
    writeln!(w, "hidden {}", ddqn.online.hidden)?;
    writeln!(w, "out {}", ddqn.online.out)?;
    writeln!(w, "sync_interval {}", ddqn.sync_interval)?;
    writeln!(w, "update_count {}", ddqn.update_count)?;
    writeln!(w, "scalar lr {:016X}", ddqn.optimizer.lr.to_bits())?;
    writeln!(w, "scalar decay {:016X}", ddqn.optimizer.decay.to_bits())?;
    writeln!(w, "scalar eps_stab {:016X}", ddqn.optimizer.eps_stab.to_bits())?;
    let tensors: [&[f64]; 12] = [
        &ddqn.online.w1, &ddqn.online.b1, &ddqn.online.w2, &ddqn.online.b2,
        &ddqn.target.w1, &ddqn.target.b1, &ddqn.target.w2, &ddqn.target.b2,
        &ddqn.optimizer.acc_w1, &ddqn.optimizer.acc_b1,
        &ddqn.optimizer.acc_w2, &ddqn.optimizer.acc_b2,
    ];
    for (name, tensor) in TENSOR_NAMES.iter().zip(tensors) {
        writeln!(w, "tensor {} {}", name, tensor.len())?;
        for v in tensor {
            writeln!(w, "{:016X}", v.to_bits())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    lines: &'a [String],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a str, DdqnError> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| DdqnError::Checkpoint("unexpected end of file".into()))?;
        self.pos += 1;
        Ok(line)
    }

    /// Next line stripped of a leading `key ` prefix.
    fn keyed(&mut self, key: &str) -> Result<&'a str, DdqnError> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|s| s.strip_prefix(' '))
            .ok_or_else(|| DdqnError::Checkpoint(format!("expected `{key}` line, got `{line}`")))
    }

    fn hex_f64(&mut self) -> Result<f64, DdqnError> {
        let line = self.next()?;
        u64::from_str_radix(line, 16)
            .map(f64::from_bits)
            .map_err(|_| DdqnError::Checkpoint(format!("bad hex value `{line}`")))
    }
}

pub fn read_checkpoint<R: BufRead>(r: &mut R) -> Result<Ddqn, DdqnError> {
    let bad = |msg: &str| DdqnError::Checkpoint(msg.to_string());
    let lines: Vec<String> = r
        .lines()
        .collect::<io::Result<_>>()
        .map_err(|e| DdqnError::Checkpoint(e.to_string()))?;
    let mut cur = Cursor { lines: &lines, pos: 0 };

    if cur.next()? != "ddqn-checkpoint v1" {
        return Err(bad("missing header"));
    }
    let hidden: usize = cur.keyed("hidden")?.parse().map_err(|_| bad("bad hidden"))?;
    let out: usize = cur.keyed("out")?.parse().map_err(|_| bad("bad out"))?;
    let sync_interval: u64 = cur
        .keyed("sync_interval")?
        .parse()
        .map_err(|_| bad("bad sync_interval"))?;
    let update_count: u64 = cur
        .keyed("update_count")?
        .parse()
        .map_err(|_| bad("bad update_count"))?;

    let mut scalars = Vec::with_capacity(3);
    for name in ["lr", "decay", "eps_stab"] {
        let body = cur.keyed("scalar")?;
        let (key, hex) = body.split_once(' ').ok_or_else(|| bad("malformed scalar line"))?;
        if key != name {
            return Err(DdqnError::Checkpoint(format!("expected scalar {name}, got {key}")));
        }
        let v = u64::from_str_radix(hex, 16)
            .map(f64::from_bits)
            .map_err(|_| bad("bad scalar hex"))?;
        scalars.push(v);
    }
    let (lr, decay, eps_stab) = (scalars[0], scalars[1], scalars[2]);

    let mut tensors: Vec<Vec<f64>> = Vec::with_capacity(12);
    for name in TENSOR_NAMES {
        let body = cur.keyed("tensor")?;
        let (key, len) = body.split_once(' ').ok_or_else(|| bad("malformed tensor line"))?;
        if key != name {
            return Err(DdqnError::Checkpoint(format!("expected tensor {name}, got {key}")));
        }
        let len: usize = len.parse().map_err(|_| bad("bad tensor length"))?;
        let expected = match name {
            n if n.ends_with(".w1") || n.ends_with(".b1") => hidden,
            n if n.ends_with(".w2") => out * hidden,
            _ => out,
        };
        if len != expected {
            return Err(DdqnError::Checkpoint(format!(
                "tensor {name} has length {len}, expected {expected}"
            )));
        }
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(cur.hex_f64()?);
        }
        tensors.push(values);
    }
    let mut it = tensors.into_iter();
    let mut take4 = || -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        )
    };
    let (ow1, ob1, ow2, ob2) = take4();
    let (tw1, tb1, tw2, tb2) = take4();
    let (aw1, ab1, aw2, ab2) = take4();
    Ok(Ddqn {
        online: QNetParams { hidden, out, w1: ow1, b1: ob1, w2: ow2, b2: ob2 },
        target: QNetParams { hidden, out, w1: tw1, b1: tb1, w2: tw2, b2: tb2 },
        optimizer: RmsPropState {
            lr,
            decay,
            eps_stab,
            acc_w1: aw1,
            acc_b1: ab1,
            acc_w2: aw2,
            acc_b2: ab2,
        },
        update_count,
        sync_interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn forward_all_zero_params_gives_zero_vector() {
        let p = QNetParams::zeros(32, 21);
        assert_eq!(p.forward(0.37), vec![0.0; 21]);
    }

    #[test]
    fn forward_bias_only_network_is_state_independent() {
        let mut p = QNetParams::zeros(8, 5);
        p.b2 = vec![2.5; 5];
        assert_eq!(p.forward(-1.0), vec![2.5; 5]);
        assert_eq!(p.forward(42.0), vec![2.5; 5]);
    }

    #[test]
    fn forward_hand_evaluated_one_by_one_network() {
        // q = 3 * relu(2 * 1 - 1) + 0.5 = 3.5
        let p = QNetParams {
            hidden: 1,
            out: 1,
            w1: vec![2.0],
            b1: vec![-1.0],
            w2: vec![3.0],
            b2: vec![0.5],
        };
        assert_eq!(p.forward(1.0), vec![3.5]);
        // negative pre-activation is cut by the relu
        assert_eq!(p.forward(0.0), vec![0.5]);
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let mut rng = derive_stream(1, "agent-init", 0);
        let p = init_params(&mut rng, 32, 21);
        assert_eq!(p.forward(0.123), p.forward(0.123));
    }

    #[test]
    fn argmax_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax(&[0.0, 3.0, 1.0, 3.0]), 1);
        assert_eq!(argmax(&[5.0, 5.0]), 0);
        assert_eq!(argmax(&[-2.0]), 0);
    }

    #[test]
    fn init_params_bounds_and_zero_biases() {
        let mut rng = derive_stream(2, "agent-init", 0);
        let p = init_params(&mut rng, 32, 21);
        let bound1 = (6.0 / 33.0f64).sqrt();
        let bound2 = (6.0 / 53.0f64).sqrt();
        assert!(p.w1.iter().all(|w| w.abs() < bound1));
        assert!(p.w2.iter().all(|w| w.abs() < bound2));
        assert!(p.b1.iter().all(|&b| b == 0.0));
        assert!(p.b2.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn init_params_reproducible_and_distinct_per_stream() {
        let a = init_params(&mut derive_stream(5, "agent-init", 0), 16, 21);
        let b = init_params(&mut derive_stream(5, "agent-init", 0), 16, 21);
        let c = init_params(&mut derive_stream(5, "agent-init", 1), 16, 21);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn test_ddqn(seed: u64) -> Ddqn {
        Ddqn::new(8, 5, 0.01, 0.9, 1e-8, 100, &mut derive_stream(seed, "agent-init", 0))
    }

    #[test]
    fn td_target_with_zero_gamma_is_the_reward() {
        let ddqn = test_ddqn(3);
        assert_eq!(ddqn.td_target(0.55, 0.0, 0.2), 0.55);
    }

    #[test]
    fn td_target_equals_plain_dqn_when_networks_match() {
        let ddqn = test_ddqn(4); // fresh: target is a copy of online
        let q = ddqn.online.forward(0.3);
        let max_q = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(ddqn.td_target(0.1, 0.7, 0.3), 0.1 + 0.7 * max_q);
    }

    #[test]
    fn td_target_uses_online_selection_with_target_evaluation() {
        // Bias-only networks with exactly representable values: the online
        // argmax is action 1, the target's own max is at action 2; the
        // bootstrap must read the target's value at action 1.
        let mut ddqn = test_ddqn(5);
        ddqn.online = QNetParams::zeros(1, 3);
        ddqn.target = QNetParams::zeros(1, 3);
        ddqn.online.b2 = vec![0.0, 1.0, 0.5];
        ddqn.target.b2 = vec![0.0, 0.25, 4.0];
        let y = ddqn.td_target(0.25, 0.5, 0.1);
        assert_eq!(y, 0.25 + 0.5 * 0.25);
    }

    #[test]
    fn train_step_zero_residual_leaves_params_unchanged() {
        let mut ddqn = test_ddqn(6);
        // Craft a transition whose TD target equals the current Q-value:
        // gamma = 0 and reward = Q_online(s, a).
        let s = 0.04;
        let q = ddqn.online.forward(s);
        let before = ddqn.online.clone();
        let loss = ddqn.train_step(s, 2, q[2], 0.07, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(ddqn.online, before);
        assert_eq!(ddqn.update_count, 1);
    }

    #[test]
    fn train_step_syncs_target_at_interval() {
        let mut ddqn = test_ddqn(7);
        ddqn.sync_interval = 10;
        let initial_target = ddqn.target.clone();
        for step in 1..=25u64 {
            let before = ddqn.target.clone();
            ddqn.train_step(0.05, 1, 0.9, 0.06, 0.7).unwrap();
            if step % 10 == 0 {
                assert_eq!(ddqn.target, ddqn.online, "sync expected at {step}");
            } else {
                assert_eq!(ddqn.target, before, "target drifted at {step}");
            }
        }
        assert_ne!(ddqn.target, initial_target);
    }

    #[test]
    fn train_step_gradient_matches_finite_differences_single_param() {
        // One-parameter network: only w2 is nonzero, so the whole gradient
        // sits in one entry and central differences pin it down.
        let mut ddqn = test_ddqn(8);
        ddqn.online = QNetParams {
            hidden: 1,
            out: 1,
            w1: vec![1.0],
            b1: vec![0.5],
            w2: vec![0.8],
            b2: vec![0.0],
        };
        ddqn.target = ddqn.online.clone();
        let (s, y) = (0.3, 1.7);
        let loss_at = |w: f64| {
            let q = w * (1.0f64 * s + 0.5).max(0.0);
            (q - y) * (q - y)
        };
        let h = 1e-5;
        let fd = (loss_at(0.8 + h) - loss_at(0.8 - h)) / (2.0 * h);
        // Analytic gradient of the selected-unit loss wrt w2.
        let q = ddqn.online.forward(s)[0];
        let analytic = 2.0 * (q - y) * (s + 0.5);
        assert!(
            ((analytic - fd) / fd.abs()).abs() < 1e-4,
            "analytic {analytic} vs fd {fd}"
        );
    }

    #[test]
    fn train_step_rejects_non_finite_inputs() {
        let mut ddqn = test_ddqn(9);
        let err = ddqn.train_step(0.05, 0, f64::NAN, 0.06, 0.0).unwrap_err();
        assert_eq!(err, DdqnError::NonFinite("loss"));
    }

    #[test]
    fn rmsprop_zero_gradient_only_decays_accumulators() {
        let mut opt = RmsPropState::new(0.01, 0.9, 1e-8, 2, 2);
        opt.acc_w1 = vec![1.0, 4.0];
        let mut params = QNetParams::zeros(2, 2);
        params.w1 = vec![0.5, -0.5];
        let before_w1 = params.w1.clone();
        let grads = QNetParams::zeros(2, 2);
        opt.apply(&mut params, &grads);
        assert_eq!(params.w1, before_w1);
        assert_eq!(opt.acc_w1, vec![0.9, 3.6]);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut ddqn = test_ddqn(10);
        for _ in 0..7 {
            ddqn.train_step(0.05, 3, 0.45, 0.06, 0.7).unwrap();
        }
        let mut buf = Vec::new();
        write_checkpoint(&ddqn, &mut buf).unwrap();
        let restored = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(restored, ddqn);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let mut bad = b"not a checkpoint".as_slice();
        assert!(matches!(
            read_checkpoint(&mut bad),
            Err(DdqnError::Checkpoint(_))
        ));
    }
}
