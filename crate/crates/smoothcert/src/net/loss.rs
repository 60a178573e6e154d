//! Training objective: smoothing (cross-entropy under generated noise),
//! variance (pull the minimum scale to a target), and mean (keep the mean
//! map small) losses, with exact reverse-mode gradients.
//!
//! Noise enters through the reparameterization `eps = mean(x) + scale(x) *
//! xi` with `xi` drawn from the standard family member, so gradients flow
//! through the generator heads.

use serde::{Deserialize, Serialize};

use crate::core::{Label, NoiseFamily, RngStream, Vector};
use crate::error::{Error, Result};
use crate::net::generator::NoiseGenNet;
use crate::net::mlp::Mlp;
use crate::net::tape::{Tape, Var};
use crate::noise::standard_variate;

/// Weights of the three loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub smoothing: f64,
    pub variance: f64,
    pub mean: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            smoothing: 1.0,
            variance: 1.0,
            mean: 0.01,
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_weights: LossWeights,
    /// Target for the minimum generated scale (and the fixed scale when
    /// training without a generator).
    pub sigma_target: f64,
    /// Noise draws per input when estimating the smoothing loss.
    pub samples_per_input: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    #[serde(default = "default_family")]
    pub family: NoiseFamily,
}

fn default_family() -> NoiseFamily {
    NoiseFamily::Gaussian
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.loss_weights;
        let weights = [w.smoothing, w.variance, w.mean];
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::ConfigError(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().all(|v| *v == 0.0) {
            return Err(Error::ConfigError(
                "at least one loss weight must be positive".into(),
            ));
        }
        if !(self.sigma_target > 0.0) {
            return Err(Error::ConfigError("sigma_target must be positive".into()));
        }
        if self.samples_per_input == 0 || self.epochs == 0 || self.batch == 0 {
            return Err(Error::ConfigError(
                "samples_per_input, epochs, and batch must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::ConfigError(
                "learning_rate must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Gradients aligned with `params_flat` of each network.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub classifier: Vec<f64>,
    pub generator: Option<Vec<f64>>,
}

fn check_example(f: &Mlp, x: &Vector, y: Label) -> Result<()> {
    if x.dim() != f.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.input_dim(),
            got: x.dim(),
        });
    }
    if y.index() >= f.output_dim() {
        return Err(Error::OutOfRange(format!(
            "label {} out of range for {} classes",
            y.index(),
            f.output_dim()
        )));
    }
    Ok(())
}

fn log_sum_exp_scalar(scores: &[f64]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

/// Cross-entropy of the classifier under the generator's noise for one
/// input, averaged over `samples` reparameterized draws.
///
/// Consumes exactly `samples * dim` stream draws, in sample-major order.
pub fn smoothing_loss(
    f: &Mlp,
    g: &NoiseGenNet,
    x: &Vector,
    y: Label,
    samples: usize,
    family: NoiseFamily,
    stream: &mut RngStream,
) -> Result<f64> {
    check_example(f, x, y)?;
    if g.input_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.input_dim(),
            got: x.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::ConfigError("samples must be positive".into()));
    }
    let (mean, scale) = g.forward(x.as_slice());
    let dim = x.dim();
    let mut acc = 0.0;
    let mut z = vec![0.0; dim];
    for _ in 0..samples {
        for i in 0..dim {
            z[i] = x[i] + mean[i] + scale[i] * standard_variate(family, stream);
        }
        let scores = f.forward(&z);
        acc += log_sum_exp_scalar(&scores) - scores[y.index()];
    }
    Ok(acc / samples as f64)
}

/// Absolute relative deviation of the minimum generated scale from the
/// target: |min(scale(x)) - sigma_target| / sigma_target.
pub fn variance_loss(g: &NoiseGenNet, x: &Vector, sigma_target: f64) -> Result<f64> {
    if g.input_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.input_dim(),
            got: x.dim(),
        });
    }
    if !(sigma_target > 0.0) {
        return Err(Error::ConfigError("sigma_target must be positive".into()));
    }
    let (_, scale) = g.forward(x.as_slice());
    let min = scale.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((min - sigma_target).abs() / sigma_target)
}

/// l2 norm of the generated mean map.
pub fn mean_loss(g: &NoiseGenNet, x: &Vector) -> Result<f64> {
    if g.input_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.input_dim(),
            got: x.dim(),
        });
    }
    let (mean, _) = g.forward(x.as_slice());
    Ok(mean.iter().map(|m| m * m).sum::<f64>().sqrt())
}

/// One example's weighted loss on the tape.
fn example_loss_tape(
    tape: &mut Tape,
    f: &Mlp,
    f_vars: &[Var],
    g: Option<(&NoiseGenNet, &[Var])>,
    x: &Vector,
    y: Label,
    cfg: &TrainConfig,
    stream: &mut RngStream,
) -> Var {
    let dim = x.dim();
    let w = cfg.loss_weights;

    let gen_maps = g.map(|(gen, g_vars)| {
        let x_vars: Vec<Var> = x.as_slice().iter().map(|v| tape.constant(*v)).collect();
        gen.forward_tape(tape, g_vars, &x_vars)
    });

    // Smoothing term: mean cross-entropy over reparameterized draws.
    let mut ce_terms = Vec::with_capacity(cfg.samples_per_input);
    for _ in 0..cfg.samples_per_input {
        let z: Vec<Var> = (0..dim)
            .map(|i| {
                let xi = standard_variate(cfg.family, stream);
                match &gen_maps {
                    Some((mean_v, scale_v)) => {
                        let noise = tape.scale(scale_v[i], xi);
                        let shifted = tape.add(mean_v[i], noise);
                        tape.add_const(shifted, x[i])
                    }
                    None => tape.constant(x[i] + cfg.sigma_target * xi),
                }
            })
            .collect();
        let scores = f.forward_tape(tape, f_vars, &z);
        let lse = tape.log_sum_exp(&scores);
        ce_terms.push(tape.sub(lse, scores[y.index()]));
    }
    let smoothing_sum = tape.sum(&ce_terms);
    let smoothing = tape.scale(smoothing_sum, 1.0 / cfg.samples_per_input as f64);
    let mut total = tape.scale(smoothing, w.smoothing);

    if let Some((mean_v, scale_v)) = &gen_maps {
        // Variance term: subgradient flows only to the argmin entry
        // (lowest index on ties).
        let mut argmin = 0;
        for (i, v) in scale_v.iter().enumerate().skip(1) {
            if tape.value(*v) < tape.value(scale_v[argmin]) {
                argmin = i;
            }
        }
        let deviation = tape.add_const(scale_v[argmin], -cfg.sigma_target);
        let abs_dev = tape.abs(deviation);
        let variance = tape.scale(abs_dev, 1.0 / cfg.sigma_target);
        let weighted_v = tape.scale(variance, w.variance);
        total = tape.add(total, weighted_v);

        // Mean term: l2 norm of the mean map.
        let squares: Vec<Var> = mean_v.iter().map(|m| tape.mul(*m, *m)).collect();
        let sum_sq = tape.sum(&squares);
        let norm = tape.sqrt(sum_sq);
        let weighted_m = tape.scale(norm, w.mean);
        total = tape.add(total, weighted_m);
    }

    total
}

/// Batch-mean weighted loss and exact reverse-mode gradients for the
/// classifier and, when present, the generator.
///
/// Example `i` of the batch draws its noise from `stream.substream(i)`, so
/// a scalar recomputation with the same substreams reproduces every term.
pub(crate) fn total_loss_and_grads_inner(
    f: &Mlp,
    g: Option<&NoiseGenNet>,
    batch: &[(Vector, Label)],
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<(f64, Grads)> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::ConfigError("batch must be non-empty".into()));
    }
    for (x, y) in batch {
        check_example(f, x, *y)?;
        if let Some(gen) = g {
            if gen.input_dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: gen.input_dim(),
                    got: x.dim(),
                });
            }
        }
    }

    let mut tape = Tape::with_capacity(1024);
    let f_vars: Vec<Var> = f.params_flat().iter().map(|p| tape.leaf(*p)).collect();
    let g_vars: Option<Vec<Var>> =
        g.map(|gen| gen.params_flat().iter().map(|p| tape.leaf(*p)).collect());

    let mut example_losses = Vec::with_capacity(batch.len());
    for (i, (x, y)) in batch.iter().enumerate() {
        let mut example_stream = stream.substream(i as u64);
        let gen_pair = match (g, &g_vars) {
            (Some(gen), Some(vars)) => Some((gen, vars.as_slice())),
            _ => None,
        };
        example_losses.push(example_loss_tape(
            &mut tape,
            f,
            &f_vars,
            gen_pair,
            x,
            *y,
            cfg,
            &mut example_stream,
        ));
    }
    let total = tape.sum(&example_losses);
    let mean = tape.scale(total, 1.0 / batch.len() as f64);
    let loss = tape.value(mean);

    let adjoint = tape.backward(mean);
    let classifier = tape.gradient(&adjoint, &f_vars);
    let generator = g_vars.map(|vars| tape.gradient(&adjoint, &vars));

    Ok((loss, Grads { classifier, generator }))
}

/// Public entry point with a generator present; see
/// [`total_loss_and_grads_inner`] for the stream discipline.
pub fn total_loss_and_grads(
    f: &Mlp,
    g: &NoiseGenNet,
    batch: &[(Vector, Label)],
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<(f64, Grads)> {
    total_loss_and_grads_inner(f, Some(g), batch, cfg, stream)
}
