//! The trainable noise generator: a dense trunk feeding two sigmoid-bounded
//! heads that map an input to its per-dimension noise means and scales.

use serde::{Deserialize, Serialize};

use crate::core::{NoiseFamily, NoiseSpec, RngStream, Vector};
use crate::error::{Error, Result};
use crate::net::mlp::{DenseLayer, Mlp};
use crate::net::tape::{Tape, Var};

/// Output ranges of the two heads. The mean map lands in
/// `[-mean_bound, mean_bound]`, the scale map in `[scale_lo, scale_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBounds {
    pub mean_bound: f64,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

impl Default for GeneratorBounds {
    fn default() -> Self {
        Self {
            mean_bound: 1.0,
            scale_lo: 0.05,
            scale_hi: 4.0,
        }
    }
}

impl GeneratorBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_bound > 0.0) {
            return Err(Error::ConfigError("mean_bound must be positive".into()));
        }
        if !(self.scale_lo > 0.0 && self.scale_lo < self.scale_hi) {
            return Err(Error::ConfigError(
                "need 0 < scale_lo < scale_hi".into(),
            ));
        }
        Ok(())
    }
}

/// Two-headed noise generator network.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGenNet {
    trunk: Mlp,
    mean_head: DenseLayer,
    scale_head: DenseLayer,
    bounds: GeneratorBounds,
}

impl NoiseGenNet {
    /// Builds a generator whose trunk has the given hidden sizes. Every
    /// trunk layer is followed by leaky-ReLU; each head is affine plus a
    /// sigmoid squashed into its output range.
    ///
    /// The scale head's bias starts at the logit of `sigma_init` within
    /// `[scale_lo, scale_hi]`, so training begins near the target scale
    /// instead of mid-range.
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        bounds: GeneratorBounds,
        sigma_init: f64,
        stream: &mut RngStream,
    ) -> Result<Self> {
        bounds.validate()?;
        if hidden.is_empty() {
            return Err(Error::ConfigError(
                "generator trunk needs at least one hidden layer".into(),
            ));
        }
        if !(sigma_init > bounds.scale_lo && sigma_init < bounds.scale_hi) {
            return Err(Error::ConfigError(format!(
                "sigma_init {sigma_init} outside ({}, {})",
                bounds.scale_lo, bounds.scale_hi
            )));
        }
        let mut trunk_dims = vec![input_dim];
        trunk_dims.extend_from_slice(hidden);
        let trunk = Mlp::new(&trunk_dims, stream)?;
        let last = *hidden.last().unwrap();
        // Small head weights keep the maps near their bias values at init.
        let mean_head = DenseLayer::init(last, input_dim, 0.1, 0.0, stream);
        let frac = (sigma_init - bounds.scale_lo) / (bounds.scale_hi - bounds.scale_lo);
        let scale_bias = (frac / (1.0 - frac)).ln();
        let scale_head = DenseLayer::init(last, input_dim, 0.1, scale_bias, stream);
        Ok(Self {
            trunk,
            mean_head,
            scale_head,
            bounds,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn trunk_dims(&self) -> &[usize] {
        self.trunk.layer_dims()
    }

    pub fn bounds(&self) -> GeneratorBounds {
        self.bounds
    }

    pub fn num_params(&self) -> usize {
        self.trunk.num_params() + self.mean_head.num_params() + self.scale_head.num_params()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.trunk.params_flat();
        out.extend_from_slice(&self.mean_head.weight);
        out.extend_from_slice(&self.mean_head.bias);
        out.extend_from_slice(&self.scale_head.weight);
        out.extend_from_slice(&self.scale_head.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let trunk_len = self.trunk.num_params();
        self.trunk.set_params_flat(&params[..trunk_len])?;
        let mut offset = trunk_len;
        for head in [&mut self.mean_head, &mut self.scale_head] {
            let w_len = head.weight.len();
            let b_len = head.bias.len();
            head.weight
                .copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            head.bias.copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
        Ok(())
    }

    pub fn apply_gradient_step(&mut self, grad: &[f64], lr: f64) -> Result<()> {
        if grad.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: grad.len(),
            });
        }
        let mut params = self.params_flat();
        for (p, g) in params.iter_mut().zip(grad.iter()) {
            *p -= lr * g;
        }
        self.set_params_flat(&params)
    }

    pub fn params_are_finite(&self) -> bool {
        self.params_flat().iter().all(|p| p.is_finite())
    }

    #[inline]
    fn squash_mean(&self, z: f64) -> f64 {
        let s = 1.0 / (1.0 + (-z).exp());
        self.bounds.mean_bound * (2.0 * s - 1.0)
    }

    #[inline]
    fn squash_scale(&self, z: f64) -> f64 {
        let s = 1.0 / (1.0 + (-z).exp());
        self.bounds.scale_lo + (self.bounds.scale_hi - self.bounds.scale_lo) * s
    }

    /// The mean map and scale map for one input.
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let features = self.trunk.forward_activated(x);
        let mut mean = Vec::new();
        let mut scale = Vec::new();
        self.mean_head.forward(&features, &mut mean);
        self.scale_head.forward(&features, &mut scale);
        for m in mean.iter_mut() {
            *m = self.squash_mean(*m);
        }
        for s in scale.iter_mut() {
            *s = self.squash_scale(*s);
        }
        (mean, scale)
    }

    /// The generated noise distribution for an input, as a validated spec.
    pub fn noise_spec(&self, x: &Vector, family: NoiseFamily) -> Result<NoiseSpec> {
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.dim(),
            });
        }
        let (mean, scale) = self.forward(x.as_slice());
        NoiseSpec::new(family, Vector::new(mean)?, Vector::new(scale)?)
    }

    /// Tape forward; returns (mean vars, scale vars).
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        params: &[Var],
        x: &[Var],
    ) -> (Vec<Var>, Vec<Var>) {
        debug_assert_eq!(params.len(), self.num_params());
        let trunk_len = self.trunk.num_params();
        let features = self
            .trunk
            .forward_activated_tape(tape, &params[..trunk_len], x);

        let mean_len = self.mean_head.num_params();
        let mean_raw = self.mean_head.forward_tape(
            tape,
            &params[trunk_len..trunk_len + mean_len],
            &features,
        );
        let scale_raw = self.scale_head.forward_tape(
            tape,
            &params[trunk_len + mean_len..],
            &features,
        );

        let b = self.bounds;
        let mean = mean_raw
            .into_iter()
            .map(|v| {
                let s = tape.sigmoid(v);
                let centered = tape.add_const(s, -0.5);
                tape.scale(centered, 2.0 * b.mean_bound)
            })
            .collect();
        let scale = scale_raw
            .into_iter()
            .map(|v| {
                let s = tape.sigmoid(v);
                let spread = tape.scale(s, b.scale_hi - b.scale_lo);
                tape.add_const(spread, b.scale_lo)
            })
            .collect();
        (mean, scale)
    }

    /// Trunk activation as used by `forward`; exposed for checkpoint tests.
    #[cfg(test)]
    pub(crate) fn trunk_features(&self, x: &[f64]) -> Vec<f64> {
        self.trunk.forward_activated(x)
    }
}
