//! Actor-critic network and its two objectives: the on-policy advantage
//! actor-critic loss and the off-policy self-imitation loss.
//!
//! The network is one [`DenseNet`] with a linear output layer of width
//! `actions + 1`: the first `actions` outputs are policy logits, the last is
//! the state value. Both heads share every hidden layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffers::SilBuffer;
use crate::error::{Error, Result};
use crate::nn::{adam_step, softmax, AdamState, DenseNet, Gradients, HiddenActivation, OutputActivation, ScalarLoss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValueNet {
    net: DenseNet,
    optimizer: AdamState,
    actions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2cCoefficients {
    pub value: f64,
    pub entropy: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub max_grad_norm: Option<f64>,
}

/// Averages over the rollout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct A2cLoss {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SilLoss {
    pub policy: f64,
    pub value: f64,
    /// Sampled transitions with a positive clipped advantage.
    pub active: usize,
    pub sampled: usize,
}

/// Single-transition advantage actor-critic loss on the raw network output.
/// The advantage weight is held constant, as in the usual stop-gradient
/// formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct A2cObjective {
    pub action: usize,
    pub ret: f64,
    pub advantage: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Single-transition self-imitation loss. `weight` is the clipped advantage
/// `(R - V)_+` evaluated before the update and held constant in the policy
/// term; the value term differentiates through `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SilObjective {
    pub action: usize,
    pub ret: f64,
    pub weight: f64,
    pub beta: f64,
}

fn split(output: &[f64]) -> (&[f64], f64) {
    let (logits, v) = output.split_at(output.len() - 1);
    (logits, v[0])
}

fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

fn log_softmax(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    logits[index] - lse
}

impl A2cObjective {
    fn parts(&self, output: &[f64]) -> (f64, f64, f64) {
        let (logits, v) = split(output);
        let policy = -log_softmax(logits, self.action) * self.advantage;
        let value = self.value_coef * (self.ret - v) * (self.ret - v);
        let h = entropy(&softmax(logits));
        (policy, value, h)
    }
}

impl ScalarLoss for A2cObjective {
    fn value(&self, output: &[f64]) -> f64 {
        let (p, v, h) = self.parts(output);
        p + v - self.entropy_coef * h
    }

    fn grad(&self, output: &[f64]) -> Vec<f64> {
        let (logits, v) = split(output);
        let probs = softmax(logits);
        let h = entropy(&probs);
        let mut g: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let onehot = if j == self.action { 1.0 } else { 0.0 };
                let log_p = if p > 0.0 { p.ln() } else { 0.0 };
                -self.advantage * (onehot - p) + self.entropy_coef * p * (log_p + h)
            })
            .collect();
        g.push(-2.0 * self.value_coef * (self.ret - v));
        g
    }
}

impl ScalarLoss for SilObjective {
    fn value(&self, output: &[f64]) -> f64 {
        let (logits, v) = split(output);
        let clipped = (self.ret - v).max(0.0);
        -log_softmax(logits, self.action) * self.weight + self.beta * 0.5 * clipped * clipped
    }

    fn grad(&self, output: &[f64]) -> Vec<f64> {
        let (logits, v) = split(output);
        let probs = softmax(logits);
        let mut g: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let onehot = if j == self.action { 1.0 } else { 0.0 };
                -self.weight * (onehot - p)
            })
            .collect();
        g.push(-self.beta * (self.ret - v).max(0.0));
        g
    }
}

impl PolicyValueNet {
    pub fn new<R: Rng + ?Sized>(
        observation_len: usize,
        hidden: &[usize],
        actions: usize,
        activation: HiddenActivation,
        lr: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if actions < 2 {
            return Err(Error::config("a policy needs at least two actions"));
        }
        let mut sizes = vec![observation_len];
        sizes.extend_from_slice(hidden);
        sizes.push(actions + 1);
        let mut net = DenseNet::new(&sizes, activation, OutputActivation::Linear, rng)?;
        // Small output weights start the policy close to uniform and the
        // value close to zero.
        net.scale_output_layer(0.01);
        Self::from_net(net, actions, lr)
    }

    pub fn from_net(net: DenseNet, actions: usize, lr: f64) -> Result<Self> {
        if net.output_len() != actions + 1 || net.output_activation() != OutputActivation::Linear {
            return Err(Error::config("policy-value net needs a linear output of width actions + 1"));
        }
        let optimizer = AdamState::new(&net, lr);
        Ok(Self { net, optimizer, actions })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn input_len(&self) -> usize {
        self.net.input_len()
    }

    /// Action probabilities and state value.
    pub fn evaluate(&self, observation: &[f64]) -> Result<(Vec<f64>, f64)> {
        let out = self.net.forward(observation)?;
        let (logits, v) = split(&out);
        Ok((softmax(logits), v))
    }

    pub fn values(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        let trace = self.net.forward_batch(states, batch)?;
        Ok((0..batch).map(|i| split(trace.output_row(i)).1).collect())
    }

    fn step(&mut self, mut grads: Gradients, clip: Option<f64>) -> Result<()> {
        if let Some(max) = clip {
            grads.clip_norm(max);
        }
        adam_step(&mut self.net, &grads, &mut self.optimizer)?;
        if !self.net.all_finite() {
            return Err(Error::non_finite("policy-value parameters"));
        }
        Ok(())
    }

    /// One gradient step on the advantage actor-critic loss averaged over a
    /// rollout. `states` is row-major, one observation per action.
    pub fn a2c_update(
        &mut self,
        states: &[f64],
        actions: &[usize],
        returns: &[f64],
        coefs: A2cCoefficients,
    ) -> Result<A2cLoss> {
        let n = actions.len();
        if n == 0 || returns.len() != n {
            return Err(Error::usage("rollout needs one return per action"));
        }
        let trace = self.net.forward_batch(states, n)?;
        let width = self.net.output_len();
        let mut out_grads = Vec::with_capacity(n * width);
        let mut loss = A2cLoss::default();
        for i in 0..n {
            let out = trace.output_row(i);
            let obj = A2cObjective {
                action: actions[i],
                ret: returns[i],
                advantage: returns[i] - split(out).1,
                value_coef: coefs.value,
                entropy_coef: coefs.entropy,
            };
            let (p, v, h) = obj.parts(out);
            loss.policy += p;
            loss.value += v;
            loss.entropy += h;
            out_grads.extend(obj.grad(out).into_iter().map(|g| g / n as f64));
        }
        let inv = 1.0 / n as f64;
        loss.policy *= inv;
        loss.value *= inv;
        loss.entropy *= inv;
        loss.total = loss.policy + loss.value - coefs.entropy * loss.entropy;
        if !loss.total.is_finite() {
            return Err(Error::non_finite(format!(
                "a2c loss (policy {}, value {}, entropy {})",
                loss.policy, loss.value, loss.entropy
            )));
        }
        let grads = self.net.backward_batch(&trace, &out_grads)?;
        self.step(grads, coefs.max_grad_norm)?;
        Ok(loss)
    }

    /// One self-imitation step on a prioritized minibatch. Sampled
    /// priorities are refreshed with the updated value estimates. When every
    /// sampled return is at or below its value the parameters are left
    /// untouched.
    pub fn sil_update<R: Rng + ?Sized>(
        &mut self,
        buffer: &mut SilBuffer,
        batch_size: usize,
        beta: f64,
        max_grad_norm: Option<f64>,
        rng: &mut R,
    ) -> Result<SilLoss> {
        if buffer.is_empty() {
            return Err(Error::usage("self-imitation update on an empty buffer"));
        }
        let slots = buffer.sample(batch_size, rng);
        let n = slots.len();
        let width = self.input_len();
        let mut states = Vec::with_capacity(n * width);
        for &s in &slots {
            states.extend_from_slice(&buffer.get(s).state);
        }
        let trace = self.net.forward_batch(&states, n)?;
        let mut out_grads = Vec::with_capacity(n * self.net.output_len());
        let mut loss = SilLoss { sampled: n, ..SilLoss::default() };
        for (i, &s) in slots.iter().enumerate() {
            let t = buffer.get(s);
            let out = trace.output_row(i);
            let weight = (t.ret - split(out).1).max(0.0);
            if weight > 0.0 {
                loss.active += 1;
            }
            let obj = SilObjective { action: t.action, ret: t.ret, weight, beta };
            loss.policy += -log_softmax(split(out).0, t.action) * weight;
            loss.value += 0.5 * weight * weight;
            out_grads.extend(obj.grad(out).into_iter().map(|g| g / n as f64));
        }
        loss.policy /= n as f64;
        loss.value /= n as f64;
        if loss.active > 0 {
            let grads = self.net.backward_batch(&trace, &out_grads)?;
            self.step(grads, max_grad_norm)?;
        }
        let values = self.values(&states, n)?;
        for (&s, v) in slots.iter().zip(values) {
            let ret = buffer.get(s).ret;
            buffer.update_priority(s, ret - v);
        }
        Ok(loss)
    }
}
