//! Dense feed-forward networks with analytic backpropagation.
//!
//! Parameters are stored per layer as a row-major `outputs x inputs` weight
//! matrix plus a bias vector. Batched passes go through `matrixmultiply`;
//! the single-sample path used inside rollouts is a plain dot-product loop.

mod adam;
mod check;
mod codec;

pub use adam::{adam_step, AdamState};
pub use check::{gradcheck, LossDescriptor, ScalarLoss};

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    layers: Vec<DenseLayer>,
    hidden_activation: HiddenActivation,
    output_activation: OutputActivation,
}

/// Per-parameter gradient arrays, shaped like the owning [`DenseNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

/// Activations recorded by a batched forward pass, consumed by backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    batch: usize,
    /// `activations[0]` is the input batch; `activations[k]` is the
    /// post-activation output of layer `k - 1`, each `batch x width` row-major.
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds at least the input")
    }

    /// Output row of sample `i`.
    pub fn output_row(&self, i: usize) -> &[f64] {
        let width = self.output().len() / self.batch;
        &self.output()[i * width..(i + 1) * width]
    }
}

impl DenseNet {
    /// All-zero network; mostly useful as a starting point for hand-built tests.
    pub fn zeros(
        layer_sizes: &[usize],
        hidden_activation: HiddenActivation,
        output_activation: OutputActivation,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::config("a network needs at least an input and an output layer"));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config(format!("layer sizes must be positive: {layer_sizes:?}")));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| DenseLayer::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            hidden_activation,
            output_activation,
        })
    }

    /// He-style uniform initialization: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
    /// zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden_activation: HiddenActivation,
        output_activation: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, hidden_activation, output_activation)?;
        for layer in &mut net.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for w in &mut layer.weights {
                *w = dist.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Multiplies the final layer's weights and biases by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w *= factor);
        last.biases.iter_mut().for_each(|b| *b *= factor);
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }

    pub(crate) fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                return &mut layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return &mut layer.biases[index];
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_len() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_len(),
                got: len,
            });
        }
        Ok(())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let mut current = input.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = layer.biases.clone();
            for (o, row) in layer.weights.chunks_exact(layer.inputs).enumerate() {
                out[o] += dot(row, &current);
            }
            if k < last {
                apply_hidden(self.hidden_activation, &mut out);
            } else if self.output_activation == OutputActivation::Softmax {
                softmax_in_place(&mut out);
            }
            current = out;
        }
        Ok(current)
    }

    /// Batched forward pass over `batch` row-major inputs, keeping every
    /// layer's activations for [`DenseNet::backward_batch`].
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Trace> {
        if batch == 0 {
            return Err(Error::usage("empty batch"));
        }
        if inputs.len() != batch * self.input_len() {
            return Err(Error::Dimension {
                what: "batched network input",
                expected: batch * self.input_len(),
                got: inputs.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let mut out = Vec::with_capacity(batch * layer.outputs);
            for _ in 0..batch {
                out.extend_from_slice(&layer.biases);
            }
            // out (batch x outputs) += prev (batch x inputs) * W^T
            gemm(
                batch,
                layer.inputs,
                layer.outputs,
                prev,
                (layer.inputs as isize, 1),
                &layer.weights,
                (1, layer.inputs as isize),
                &mut out,
                (layer.outputs as isize, 1),
                1.0,
            );
            if k < last {
                apply_hidden(self.hidden_activation, &mut out);
            } else if self.output_activation == OutputActivation::Softmax {
                out.chunks_exact_mut(layer.outputs).for_each(softmax_in_place);
            }
            activations.push(out);
        }
        Ok(Trace { batch, activations })
    }

    /// Gradient of a loss with respect to every parameter for one sample.
    ///
    /// `output_grad` is d(loss)/d(output) where output is the post-activation
    /// result of [`DenseNet::forward`].
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<Gradients> {
        let trace = self.forward_batch(input, 1)?;
        self.backward_batch(&trace, output_grad)
    }

    /// Backpropagates `output_grads` (batch x outputs) through a recorded
    /// trace. Gradients are summed over the batch.
    pub fn backward_batch(&self, trace: &Trace, output_grads: &[f64]) -> Result<Gradients> {
        let batch = trace.batch;
        if output_grads.len() != batch * self.output_len() {
            return Err(Error::Dimension {
                what: "output gradient",
                expected: batch * self.output_len(),
                got: output_grads.len(),
            });
        }
        let mut delta = output_grads.to_vec();
        if self.output_activation == OutputActivation::Softmax {
            let width = self.output_len();
            for (d, p) in delta
                .chunks_exact_mut(width)
                .zip(trace.output().chunks_exact(width))
            {
                let inner = dot(d, p);
                for (di, &pi) in d.iter_mut().zip(p) {
                    *di = pi * (*di - inner);
                }
            }
        }

        let mut grads = Gradients::zeros_like(self);
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let prev = &trace.activations[k];
            let g = &mut grads.layers[k];
            // dW (outputs x inputs) = delta^T (outputs x batch) * prev (batch x inputs)
            gemm(
                layer.outputs,
                batch,
                layer.inputs,
                &delta,
                (1, layer.outputs as isize),
                prev,
                (layer.inputs as isize, 1),
                &mut g.weights,
                (layer.inputs as isize, 1),
                0.0,
            );
            for row in delta.chunks_exact(layer.outputs) {
                for (b, d) in g.biases.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if !g.weights.iter().chain(&g.biases).all(|v| v.is_finite()) {
                return Err(Error::non_finite(format!("gradient of layer {k}")));
            }
            if k == 0 {
                break;
            }
            // d(prev) (batch x inputs) = delta (batch x outputs) * W (outputs x inputs)
            let mut prev_delta = vec![0.0; batch * layer.inputs];
            gemm(
                batch,
                layer.outputs,
                layer.inputs,
                &delta,
                (layer.outputs as isize, 1),
                &layer.weights,
                (layer.inputs as isize, 1),
                &mut prev_delta,
                (layer.inputs as isize, 1),
                0.0,
            );
            match self.hidden_activation {
                HiddenActivation::Relu => {
                    for (d, &a) in prev_delta.iter_mut().zip(prev) {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                HiddenActivation::Tanh => {
                    for (d, &a) in prev_delta.iter_mut().zip(prev) {
                        *d *= 1.0 - a * a;
                    }
                }
            }
            delta = prev_delta;
        }
        Ok(grads)
    }
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
    }

    fn congruent(&self, net: &DenseNet) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.inputs == l.inputs && g.outputs == l.outputs)
    }
}

pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Draws an index with probability `probs[i]`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::Distribution("empty distribution".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Distribution(format!("negative or non-finite entry in {probs:?}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Distribution(format!("probabilities sum to {total}")));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

fn apply_hidden(act: HiddenActivation, values: &mut [f64]) {
    match act {
        HiddenActivation::Relu => values.iter_mut().for_each(|v| *v = v.max(0.0)),
        HiddenActivation::Tanh => values.iter_mut().for_each(|v| *v = v.tanh()),
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let mut acc = [0.0f64; 4];
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..a.len() {
        sum += a[j] * b[j];
    }
    sum
}

/// C (m x n) = A (m x k) * B (k x n) + beta * C, with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    c_strides: (isize, isize),
    beta: f64,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the asserted lengths cover every index reachable with the given
    // row/column strides for these row-major or transposed-row-major views.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            c_strides.0,
            c_strides.1,
        );
    }
}
