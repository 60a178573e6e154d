//! Dense feed-forward networks with leaky-ReLU hidden activations.

use crate::certify::BaseClassifier;
use crate::core::{Label, RngStream, Vector};
use crate::error::{Error, Result};
use crate::net::tape::{Tape, Var};

/// Negative-side slope of every activation in the crate.
pub const LEAKY_SLOPE: f64 = 0.01;

/// One affine layer; weights in row-major (out x in) order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub(crate) weight: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    pub(crate) fan_in: usize,
    pub(crate) fan_out: usize,
}

impl DenseLayer {
    /// He-style uniform init scaled by `gain`; biases start at `bias_init`.
    pub(crate) fn init(
        fan_in: usize,
        fan_out: usize,
        gain: f64,
        bias_init: f64,
        stream: &mut RngStream,
    ) -> Self {
        let bound = gain * (6.0 / fan_in as f64).sqrt();
        let weight = (0..fan_in * fan_out)
            .map(|_| (stream.next_uniform() * 2.0 - 1.0) * bound)
            .collect();
        Self {
            weight,
            bias: vec![bias_init; fan_out],
            fan_in,
            fan_out,
        }
    }

    pub(crate) fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.fan_out {
            let row = &self.weight[o * self.fan_in..(o + 1) * self.fan_in];
            let mut acc = self.bias[o];
            for (w, v) in row.iter().zip(x.iter()) {
                acc += w * v;
            }
            out.push(acc);
        }
    }

    /// Tape forward given this layer's parameter vars laid out as
    /// `weight row-major ++ bias`.
    pub(crate) fn forward_tape(&self, tape: &mut Tape, params: &[Var], x: &[Var]) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.fan_out);
        for o in 0..self.fan_out {
            let mut acc = params[self.fan_in * self.fan_out + o]; // bias
            for i in 0..self.fan_in {
                let prod = tape.mul(params[o * self.fan_in + i], x[i]);
                acc = tape.add(acc, prod);
            }
            out.push(acc);
        }
        out
    }

    pub(crate) fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Multi-layer perceptron: affine layers with leaky-ReLU between them and a
/// linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
}

impl Mlp {
    /// Builds a network with the given layer sizes, e.g. `[16, 32, 2]` for a
    /// 16-input, 2-class classifier with one hidden layer of 32 units.
    pub fn new(layer_dims: &[usize], stream: &mut RngStream) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::ConfigError(
                "a network needs at least input and output dims".into(),
            ));
        }
        if layer_dims.iter().any(|d| *d == 0) {
            return Err(Error::ConfigError("layer dims must be positive".into()));
        }
        let layers = layer_dims
            .windows(2)
            .map(|w| DenseLayer::init(w[0], w[1], 1.0, 0.0, stream))
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    /// Rebuilds a network from flat parameters (layer by layer, weights
    /// row-major then biases).
    pub fn from_flat(layer_dims: &[usize], params: &[f64]) -> Result<Self> {
        let mut stream = crate::core::rng_stream(0, 0);
        let mut net = Self::new(layer_dims, &mut stream)?;
        net.set_params_flat(params)?;
        Ok(net)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weight);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weight.len();
            let b_len = layer.bias.len();
            layer.weight.copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            layer.bias.copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
        Ok(())
    }

    /// In-place SGD step `p -= lr * grad`.
    pub fn apply_gradient_step(&mut self, grad: &[f64], lr: f64) -> Result<()> {
        if grad.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: grad.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.weight.iter_mut() {
                *w -= lr * grad[offset];
                offset += 1;
            }
            for b in layer.bias.iter_mut() {
                *b -= lr * grad[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    pub fn params_are_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|p| p.is_finite()))
    }

    /// Raw scores (logits) for an input slice of the right length.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            layer.forward(&current, &mut next);
            if li + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v *= LEAKY_SLOPE;
                    }
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Validated scores for a domain vector; softmax of these gives class
    /// probabilities.
    pub fn forward_scores(&self, x: &Vector) -> Result<Vec<f64>> {
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.dim(),
            });
        }
        Ok(self.forward(x.as_slice()))
    }

    /// Tape forward. `params` must hold this network's parameters in flat
    /// order (see [`Mlp::params_flat`]); `x` holds the input vars.
    pub fn forward_tape(&self, tape: &mut Tape, params: &[Var], x: &[Var]) -> Vec<Var> {
        debug_assert_eq!(params.len(), self.num_params());
        let mut current: Vec<Var> = x.to_vec();
        let mut offset = 0;
        for (li, layer) in self.layers.iter().enumerate() {
            let span = layer.num_params();
            current = layer.forward_tape(tape, &params[offset..offset + span], &current);
            offset += span;
            if li + 1 < self.layers.len() {
                current = current
                    .into_iter()
                    .map(|v| tape.leaky_relu(v, LEAKY_SLOPE))
                    .collect();
            }
        }
        current
    }

    /// Leaky-ReLU applied to a forward pass; used where the network acts as
    /// a feature trunk rather than a score head.
    pub fn forward_activated(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.forward(x);
        for v in out.iter_mut() {
            if *v < 0.0 {
                *v *= LEAKY_SLOPE;
            }
        }
        out
    }

    pub fn forward_activated_tape(&self, tape: &mut Tape, params: &[Var], x: &[Var]) -> Vec<Var> {
        self.forward_tape(tape, params, x)
            .into_iter()
            .map(|v| tape.leaky_relu(v, LEAKY_SLOPE))
            .collect()
    }
}

impl BaseClassifier for Mlp {
    fn num_classes(&self) -> usize {
        self.output_dim()
    }

    fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn evaluate(&self, x: &[f64]) -> Label {
        let scores = self.forward(x);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Label::new(best, self.num_classes()).unwrap()
    }

    fn scores(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.forward(x))
    }
}
