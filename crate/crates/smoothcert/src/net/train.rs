//! Plain SGD over the combined objective, single-threaded over optimizer
//! state, deterministic per seed.

use crate::core::{rng_stream, Label, RngStream, Vector};
use crate::error::{Error, Result};
use crate::net::generator::NoiseGenNet;
use crate::net::loss::{total_loss_and_grads_inner, TrainConfig};
use crate::net::mlp::Mlp;

/// Substream tag separating training randomness from everything else keyed
/// on the same seed.
const TRAIN_STREAM_TAG: u64 = 0x7121;

fn shuffle(indices: &mut [usize], stream: &mut RngStream) {
    for i in (1..indices.len()).rev() {
        let j = (stream.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

/// Trains the classifier and, when given, the noise generator jointly.
/// Returns the per-epoch mean total loss.
///
/// Without a generator the smoothing term uses fixed isotropic noise at
/// `cfg.sigma_target` with zero mean (the baseline training mode); the
/// variance and mean terms vanish.
pub fn train(
    f: &mut Mlp,
    mut g: Option<&mut NoiseGenNet>,
    data: &[(Vector, Label)],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::ConfigError("training data must be non-empty".into()));
    }
    if let Some(gen) = g.as_deref() {
        let b = gen.bounds();
        if !(cfg.sigma_target >= b.scale_lo && cfg.sigma_target <= b.scale_hi) {
            return Err(Error::ConfigError(format!(
                "sigma_target {} outside the generator scale range [{}, {}]",
                cfg.sigma_target, b.scale_lo, b.scale_hi
            )));
        }
    }

    let root = rng_stream(cfg.seed, TRAIN_STREAM_TAG);
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let epoch_stream = root.substream(epoch as u64);
        let mut shuffle_stream = epoch_stream.substream(0);
        shuffle(&mut indices, &mut shuffle_stream);

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in indices.chunks(cfg.batch).enumerate() {
            let batch: Vec<(Vector, Label)> =
                chunk.iter().map(|&i| data[i].clone()).collect();
            let batch_stream = epoch_stream.substream(1 + b as u64);
            let (loss, grads) =
                total_loss_and_grads_inner(f, g.as_deref(), &batch, cfg, batch_stream)?;
            if !loss.is_finite() {
                return Err(Error::DivergenceDetected { epoch });
            }
            f.apply_gradient_step(&grads.classifier, cfg.learning_rate)?;
            if let Some(gen) = g.as_deref_mut() {
                let gg = grads
                    .generator
                    .as_ref()
                    .expect("generator gradients present when training one");
                gen.apply_gradient_step(gg, cfg.learning_rate)?;
            }
            epoch_loss += loss;
            batches += 1;
        }
        if !f.params_are_finite() || g.as_deref().is_some_and(|gen| !gen.params_are_finite()) {
            return Err(Error::DivergenceDetected { epoch });
        }
        trace.push(epoch_loss / batches as f64);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::NoiseFamily;
    use crate::net::generator::GeneratorBounds;
    use crate::net::loss::LossWeights;

    /// Two Gaussian blobs at +-(2, 0) with std 0.3, 512 points.
    fn blobs_2d() -> Vec<(Vector, Label)> {
        let mut stream = rng_stream(99, 0);
        let mut data = Vec::new();
        for i in 0..512 {
            let class = i % 2;
            let center = if class == 0 { 2.0 } else { -2.0 };
            let gauss = |s: &mut RngStream| {
                crate::noise::standard_variate(NoiseFamily::Gaussian, s) * 0.3
            };
            let x = Vector::new(vec![center + gauss(&mut stream), gauss(&mut stream)]).unwrap();
            data.push((x, Label::new(class, 2).unwrap()));
        }
        data
    }

    fn cfg(epochs: usize, lr: f64) -> TrainConfig {
        TrainConfig {
            loss_weights: LossWeights::default(),
            sigma_target: 0.5,
            samples_per_input: 5,
            learning_rate: lr,
            epochs,
            batch: 32,
            seed: 17,
            family: NoiseFamily::Gaussian,
        }
    }

    fn fresh_nets() -> (Mlp, NoiseGenNet) {
        let mut stream = rng_stream(21, 0);
        let f = Mlp::new(&[2, 16, 2], &mut stream).unwrap();
        let g =
            NoiseGenNet::new(2, &[16], GeneratorBounds::default(), 0.5, &mut stream).unwrap();
        (f, g)
    }

    #[test]
    fn training_reduces_smoothing_loss_on_blobs() {
        let data = blobs_2d();
        let (mut f, mut g) = fresh_nets();
        let c = cfg(30, 0.05);

        let initial = mean_smoothing_loss(&f, &g, &data, &c);
        let trace = train(&mut f, Some(&mut g), &data, &c).unwrap();
        assert_eq!(trace.len(), 30);
        assert!(trace.iter().all(|l| l.is_finite()));
        let trained = mean_smoothing_loss(&f, &g, &data, &c);
        assert!(
            trained < initial,
            "smoothing loss did not drop: {initial} -> {trained}"
        );
    }

    fn mean_smoothing_loss(
        f: &Mlp,
        g: &NoiseGenNet,
        data: &[(Vector, Label)],
        c: &TrainConfig,
    ) -> f64 {
        let mut total = 0.0;
        for (i, (x, y)) in data.iter().enumerate() {
            let mut s = rng_stream(1234, i as u64);
            total +=
                crate::net::loss::smoothing_loss(f, g, x, *y, 5, c.family, &mut s).unwrap();
        }
        total / data.len() as f64
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_untouched() {
        let data = blobs_2d();
        let (mut f, mut g) = fresh_nets();
        let f_before = f.params_flat();
        let g_before = g.params_flat();
        train(&mut f, Some(&mut g), &data, &cfg(2, 0.0)).unwrap();
        assert_eq!(f.params_flat(), f_before);
        assert_eq!(g.params_flat(), g_before);
    }

    #[test]
    fn fixed_seed_reproduces_loss_trace() {
        let data = blobs_2d();
        let (mut f1, mut g1) = fresh_nets();
        let (mut f2, mut g2) = fresh_nets();
        let t1 = train(&mut f1, Some(&mut g1), &data, &cfg(5, 0.05)).unwrap();
        let t2 = train(&mut f2, Some(&mut g2), &data, &cfg(5, 0.05)).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(f1.params_flat(), f2.params_flat());
    }

    #[test]
    fn variance_only_objective_pulls_min_scale_to_target() {
        let data = blobs_2d();
        let (mut f, mut g) = fresh_nets();
        // Nudge the scale head away from the target first.
        let mut params = g.params_flat();
        let n = params.len();
        for p in params[n - 2..].iter_mut() {
            *p += 2.0;
        }
        g.set_params_flat(&params).unwrap();

        let mut c = cfg(200, 0.04);
        c.loss_weights = LossWeights {
            smoothing: 0.0,
            variance: 1.0,
            mean: 0.0,
        };
        train(&mut f, Some(&mut g), &data, &c).unwrap();

        let worst = data
            .iter()
            .map(|(x, _)| {
                crate::net::loss::variance_loss(&g, x, c.sigma_target).unwrap()
            })
            .fold(0.0f64, f64::max);
        assert!(worst < 0.05, "worst relative deviation {worst}");
    }

    #[test]
    fn baseline_mode_trains_without_generator() {
        let data = blobs_2d();
        let (mut f, _) = fresh_nets();
        let trace = train(&mut f, None, &data, &cfg(10, 0.05)).unwrap();
        assert!(trace.last().unwrap() < trace.first().unwrap());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let (mut f, _) = fresh_nets();
        assert!(train(&mut f, None, &[], &cfg(1, 0.1)).is_err());
    }
}

