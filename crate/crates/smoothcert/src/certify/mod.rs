//! The smoothed classifier: Monte Carlo estimation, binomial statistics,
//! and the PREDICT / CERTIFY procedures.
//!
//! Sample `j` of a run always reads the stream at counter `j * dim`, so
//! counts are identical for any worker count and any batch size.

mod binomial;

pub use binomial::{binom_p_value, binom_upper_tail, beta_inc_reg, ln_choose, ln_gamma, lower_conf_bound};

use crate::core::{
    clamp_probability, validate_noise_spec, Certificate, CertifyConfig, CertifyOutcome, Label,
    NoiseFamily, NoiseSpec, Norm, RngStream, Vector,
};
use crate::error::{Error, Result};
use crate::noise::sample_perturbed;
use crate::radius::{radius_aniso_laplace, radius_binary_gaussian, ProbabilityBounds};

/// Substream tag for the class-selection pass.
const STREAM_SELECT: u64 = 0;
/// Substream tag for the probability-estimation pass.
const STREAM_ESTIMATE: u64 = 1;

/// A deterministic base classifier.
///
/// `evaluate` must be side-effect free and safe to call concurrently; Monte
/// Carlo sampling fans it out across workers.
pub trait BaseClassifier: Sync {
    fn num_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Hard label for an input, presented as a slice of length `input_dim`.
    fn evaluate(&self, x: &[f64]) -> Label;
    /// Class scores, when the classifier exposes them. `evaluate` must
    /// agree with the argmax (lowest index on ties).
    fn scores(&self, x: &[f64]) -> Option<Vec<f64>> {
        let _ = x;
        None
    }
}

/// Tallies of base-classifier predictions over noise draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonteCarloCounts {
    counts: Vec<u64>,
    total: u64,
}

impl MonteCarloCounts {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![0; num_classes],
            total: 0,
        }
    }

    fn tally(&mut self, label: Label) {
        self.counts[label.index()] += 1;
        self.total += 1;
    }

    fn merge(&mut self, other: &MonteCarloCounts) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, class: usize) -> u64 {
        self.counts[class]
    }

    /// Index with the highest count; lowest index wins ties.
    pub fn top_index(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate().skip(1) {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Top two indices by count; ties broken toward the lower index.
    pub fn top_two(&self) -> (usize, usize) {
        let first = self.top_index();
        let mut second = usize::MAX;
        for (i, &c) in self.counts.iter().enumerate() {
            if i == first {
                continue;
            }
            if second == usize::MAX || c > self.counts[second] {
                second = i;
            }
        }
        (first, second)
    }
}

/// Draws `num` noise vectors, evaluates `f(x + eps)`, and tallies labels.
///
/// Sample `j` reads the stream at offset `j * dim` from the stream's current
/// position; the result does not depend on scheduling.
pub fn classify_samples<F: BaseClassifier + ?Sized>(
    f: &F,
    x: &Vector,
    spec: &NoiseSpec,
    num: u64,
    stream: RngStream,
) -> Result<MonteCarloCounts> {
    classify_samples_with_workers(f, x, spec, num, stream, 1, num.max(1))
}

/// Worker fan-out variant of [`classify_samples`]; identical counts for any
/// `workers` and `batch_size`.
pub fn classify_samples_with_workers<F: BaseClassifier + ?Sized>(
    f: &F,
    x: &Vector,
    spec: &NoiseSpec,
    num: u64,
    stream: RngStream,
    workers: usize,
    batch_size: u64,
) -> Result<MonteCarloCounts> {
    validate_noise_spec(spec, x.dim())?;
    if f.input_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.input_dim(),
            got: x.dim(),
        });
    }
    let workers = workers.max(1);
    let batch = batch_size.max(1);
    let dim = x.dim() as u64;

    let run_range = |lo: u64, hi: u64| -> MonteCarloCounts {
        let mut counts = MonteCarloCounts::new(f.num_classes());
        let mut buf = vec![0.0; x.dim()];
        for j in lo..hi {
            let mut s = stream.at_offset(stream.position() + j * dim);
            sample_perturbed(spec, x.as_slice(), &mut buf, &mut s);
            counts.tally(f.evaluate(&buf));
        }
        counts
    };

    if workers == 1 {
        return Ok(run_range(0, num));
    }

    let num_tasks = num.div_ceil(batch);
    let mut merged = MonteCarloCounts::new(f.num_classes());
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let run_range = &run_range;
                scope.spawn(move || {
                    let mut local = MonteCarloCounts::new(f.num_classes());
                    let mut task = w;
                    while task < num_tasks {
                        let lo = task * batch;
                        let hi = (lo + batch).min(num);
                        local.merge(&run_range(lo, hi));
                        task += workers as u64;
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            merged.merge(&h.join().expect("classification worker panicked"));
        }
    });
    Ok(merged)
}

/// Outcome of the PREDICT procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictOutcome {
    Predicted(Label),
    Abstain,
}

/// PREDICT: sample `n` draws, take the top two classes, and return the top
/// class only if the two-sided binomial test separates them at level
/// `confidence_alpha`.
pub fn predict<F: BaseClassifier + ?Sized>(
    f: &F,
    x: &Vector,
    spec: &NoiseSpec,
    n: u64,
    confidence_alpha: f64,
    stream: RngStream,
) -> Result<PredictOutcome> {
    if !(confidence_alpha > 0.0 && confidence_alpha < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence_alpha must lie in (0,1), got {confidence_alpha}"
        )));
    }
    let counts = classify_samples(f, x, spec, n, stream)?;
    let (c_a, c_b) = counts.top_two();
    let n_a = counts.count(c_a);
    let n_b = counts.count(c_b);
    let p_value = binom_p_value(n_a, n_a + n_b, 0.5)?;
    if p_value <= confidence_alpha {
        Ok(PredictOutcome::Predicted(Label::new(
            c_a,
            f.num_classes(),
        )?))
    } else {
        Ok(PredictOutcome::Abstain)
    }
}

/// Internals of a certification run, exposed for statistical audits.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyDetails {
    /// Class selected with the first `n0` samples.
    pub selected: Label,
    /// Estimation-pass count for the selected class.
    pub selected_count: u64,
    /// Clopper-Pearson lower bound on the selected class probability.
    pub pa_lower: f64,
    pub outcome: CertifyOutcome,
}

/// CERTIFY: select the top class with `n0` samples, lower-bound its
/// probability with `n` fresh samples, and emit a radius when the bound
/// clears 1/2.
///
/// Gaussian specs certify an l2 radius `min(sigma_i) * Phi^-1(pa_lower)`;
/// Laplace specs certify the l1 radius of the two-branch bound with
/// `pb_upper = 1 - pa_lower`. Selection and estimation use disjoint
/// substreams, as the confidence bound requires.
pub fn certify<F: BaseClassifier + ?Sized>(
    f: &F,
    x: &Vector,
    spec: &NoiseSpec,
    cfg: &CertifyConfig,
    stream: RngStream,
) -> Result<CertifyOutcome> {
    certify_with_workers(f, x, spec, cfg, stream, 1).map(|d| d.outcome)
}

/// Worker fan-out variant of [`certify`] returning the run internals.
pub fn certify_with_workers<F: BaseClassifier + ?Sized>(
    f: &F,
    x: &Vector,
    spec: &NoiseSpec,
    cfg: &CertifyConfig,
    stream: RngStream,
    workers: usize,
) -> Result<CertifyDetails> {
    cfg.validate()?;
    let select = classify_samples_with_workers(
        f,
        x,
        spec,
        cfg.n0,
        stream.substream(STREAM_SELECT),
        workers,
        cfg.batch_size,
    )?;
    let c_a = select.top_index();
    let estimate = classify_samples_with_workers(
        f,
        x,
        spec,
        cfg.n,
        stream.substream(STREAM_ESTIMATE),
        workers,
        cfg.batch_size,
    )?;
    let k = estimate.count(c_a);
    let pa_lower = lower_conf_bound(k, cfg.n, 1.0 - cfg.confidence_alpha)?;
    let selected = Label::new(c_a, f.num_classes())?;

    let outcome = if pa_lower > 0.5 {
        // Report the clamped bound: it is what the radius was computed from.
        let pa = clamp_probability(pa_lower);
        let (radius, norm) = match spec.family() {
            NoiseFamily::Gaussian => (radius_binary_gaussian(spec.scale(), pa)?, Norm::L2),
            NoiseFamily::Laplace => (
                radius_aniso_laplace(spec.scale(), &ProbabilityBounds::from_pa_lower(pa)?)?,
                Norm::L1,
            ),
        };
        CertifyOutcome::Certified(Certificate {
            label: selected,
            radius,
            pa_lower: pa,
            norm,
        })
    } else {
        CertifyOutcome::Abstain
    };

    Ok(CertifyDetails {
        selected,
        selected_count: k,
        pa_lower,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::rng_stream;
    use crate::noise::{std_normal_cdf, std_normal_quantile};
    use crate::oracle::LinearClassifier;

    /// Always answers the same class.
    struct Constant {
        class: usize,
        classes: usize,
        dim: usize,
    }

    impl BaseClassifier for Constant {
        fn num_classes(&self) -> usize {
            self.classes
        }
        fn input_dim(&self) -> usize {
            self.dim
        }
        fn evaluate(&self, _x: &[f64]) -> Label {
            Label::new(self.class, self.classes).unwrap()
        }
    }

    fn threshold_1d() -> LinearClassifier {
        // class 1 iff z > 0 (up to the measure-zero boundary)
        LinearClassifier::new(Vector::new(vec![1.0]).unwrap(), 0.0).unwrap()
    }

    fn gaussian(mean: Vec<f64>, scale: Vec<f64>) -> NoiseSpec {
        NoiseSpec::new(
            NoiseFamily::Gaussian,
            Vector::new(mean).unwrap(),
            Vector::new(scale).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_classifier_sweeps_all_counts() {
        let f = Constant {
            class: 0,
            classes: 3,
            dim: 2,
        };
        let spec = NoiseSpec::isotropic_gaussian(2, 1.0).unwrap();
        let x = Vector::zeros(2);
        let counts =
            classify_samples(&f, &x, &spec, 50, rng_stream(0, 0)).unwrap();
        assert_eq!(counts.counts(), &[50, 0, 0]);
        assert_eq!(counts.total(), 50);
    }

    #[test]
    fn threshold_frequencies_match_analytic() {
        const N: u64 = 1_000_000;
        let f = threshold_1d();
        let x = Vector::zeros(1);

        let spec = NoiseSpec::isotropic_gaussian(1, 1.0).unwrap();
        let counts = classify_samples(&f, &x, &spec, N, rng_stream(5, 0)).unwrap();
        let freq = counts.count(1) as f64 / N as f64;
        assert!((freq - 0.5).abs() < 0.002, "freq={freq}");

        // Mean shift moves mass across the boundary: P = Phi(1).
        let spec = gaussian(vec![1.0], vec![1.0]);
        let counts = classify_samples(&f, &x, &spec, N, rng_stream(6, 0)).unwrap();
        let freq = counts.count(1) as f64 / N as f64;
        let expect = std_normal_cdf(1.0).unwrap();
        assert!((freq - expect).abs() < 0.002, "freq={freq}");
    }

    #[test]
    fn worker_counts_are_identical() {
        let f = threshold_1d();
        let x = Vector::zeros(1);
        let spec = NoiseSpec::isotropic_gaussian(1, 0.7).unwrap();
        let stream = rng_stream(9, 3);
        let seq = classify_samples_with_workers(&f, &x, &spec, 10_001, stream, 1, 128).unwrap();
        for workers in [2, 3, 8] {
            let par =
                classify_samples_with_workers(&f, &x, &spec, 10_001, stream, workers, 128).unwrap();
            assert_eq!(seq, par);
        }
        // batch size must not matter either
        let other = classify_samples_with_workers(&f, &x, &spec, 10_001, stream, 4, 7).unwrap();
        assert_eq!(seq, other);
    }

    #[test]
    fn top_two_tie_breaks_to_lowest_index() {
        let mut counts = MonteCarloCounts::new(4);
        counts.counts = vec![5, 7, 7, 5];
        counts.total = 24;
        assert_eq!(counts.top_index(), 1);
        assert_eq!(counts.top_two(), (1, 2));

        let mut tie = MonteCarloCounts::new(3);
        tie.counts = vec![4, 4, 4];
        tie.total = 12;
        assert_eq!(tie.top_two(), (0, 1));
    }

    #[test]
    fn predict_constant_never_abstains() {
        let f = Constant {
            class: 2,
            classes: 5,
            dim: 3,
        };
        let spec = NoiseSpec::isotropic_gaussian(3, 1.0).unwrap();
        let x = Vector::zeros(3);
        for seed in 0..20 {
            let out = predict(&f, &x, &spec, 100, 0.001, rng_stream(seed, 0)).unwrap();
            assert_eq!(
                out,
                PredictOutcome::Predicted(Label::new(2, 5).unwrap())
            );
        }
    }

    #[test]
    fn predict_abstains_at_the_boundary() {
        // True p = 1/2: the test should reject (and thus predict) at rate
        // <= alpha. With 200 seeds and alpha = 0.001, allow one rejection.
        let f = threshold_1d();
        let spec = NoiseSpec::isotropic_gaussian(1, 1.0).unwrap();
        let x = Vector::zeros(1);
        let mut abstained = 0;
        for seed in 0..200 {
            if predict(&f, &x, &spec, 500, 0.001, rng_stream(seed, 1)).unwrap()
                == PredictOutcome::Abstain
            {
                abstained += 1;
            }
        }
        assert!(abstained >= 199, "abstained {abstained}/200");
    }

    #[test]
    fn predict_recovers_strong_class() {
        // Analytic p_A = Phi(1.2816) ~ 0.9; n = 1000 gives overwhelming power.
        let f = threshold_1d();
        let z = std_normal_quantile(0.9).unwrap();
        let spec = gaussian(vec![z], vec![1.0]);
        let x = Vector::zeros(1);
        let mut correct = 0;
        for seed in 0..1000 {
            if let PredictOutcome::Predicted(l) =
                predict(&f, &x, &spec, 1000, 0.001, rng_stream(seed, 2)).unwrap()
            {
                if l.index() == 1 {
                    correct += 1;
                }
            }
        }
        assert!(correct >= 990, "correct {correct}/1000");
    }

    #[test]
    fn certify_constant_classifier_hits_saturated_radius() {
        let f = Constant {
            class: 0,
            classes: 2,
            dim: 2,
        };
        let spec = NoiseSpec::isotropic_gaussian(2, 1.0).unwrap();
        let x = Vector::zeros(2);
        let cfg = CertifyConfig {
            n0: 100,
            n: 100_000,
            confidence_alpha: 0.001,
            batch_size: 4096,
            seed: 0,
        };
        let outcome = certify(&f, &x, &spec, &cfg, rng_stream(3, 0)).unwrap();
        let cert = outcome.certificate().expect("constant must certify");
        assert_eq!(cert.label.index(), 0);
        assert_eq!(cert.norm, Norm::L2);

        // Compose the oracles: pa = alpha^(1/n), radius = Phi^-1(pa).
        let pa = lower_conf_bound(100_000, 100_000, 0.999).unwrap();
        let expect = std_normal_quantile(pa).unwrap();
        assert!((cert.radius - expect).abs() < 1e-12);
        // frozen from a high-precision evaluation of Phi^-1(0.001^(1/100000))
        assert!(
            (cert.radius - 3.8114565633899518).abs() < 1e-9,
            "radius {}",
            cert.radius
        );
    }

    #[test]
    fn certify_abstains_on_balanced_classifier() {
        let f = threshold_1d();
        let spec = NoiseSpec::isotropic_gaussian(1, 1.0).unwrap();
        let x = Vector::zeros(1);
        let cfg = CertifyConfig {
            n0: 50,
            n: 1000,
            confidence_alpha: 0.001,
            batch_size: 512,
            seed: 0,
        };
        let mut abstain = 0;
        for seed in 0..200 {
            if !certify(&f, &x, &spec, &cfg, rng_stream(seed, 4))
                .unwrap()
                .is_certified()
            {
                abstain += 1;
            }
        }
        assert!(abstain >= 199, "abstained {abstain}/200");
    }

    #[test]
    fn certify_radius_concentrates_below_true_value() {
        // 2-D linear classifier with analytic p_A = Phi(1) and scales (1, 2):
        // the true radius cap is min(sigma) * Phi^-1(Phi(1)) = 1.
        let f = LinearClassifier::new(Vector::new(vec![1.0, 0.0]).unwrap(), -1.0).unwrap();
        let spec = gaussian(vec![0.0, 0.0], vec![1.0, 2.0]);
        let x = Vector::zeros(2);
        let cfg = CertifyConfig {
            n0: 100,
            n: 100_000,
            confidence_alpha: 0.001,
            batch_size: 8192,
            seed: 0,
        };
        let mut in_band = 0;
        const TRIALS: u64 = 40;
        for seed in 0..TRIALS {
            let outcome = certify(&f, &x, &spec, &cfg, rng_stream(seed, 5)).unwrap();
            let cert = outcome.certificate().expect("p_A ~ 0.84 must certify");
            assert_eq!(cert.label.index(), 1);
            assert!(cert.radius <= 1.0 + 1e-9, "radius {}", cert.radius);
            if cert.radius >= 0.93 {
                in_band += 1;
            }
        }
        assert!(in_band * 100 >= TRIALS * 95, "in band {in_band}/{TRIALS}");
    }

    #[test]
    fn certify_is_deterministic_across_workers() {
        let f = LinearClassifier::new(Vector::new(vec![0.6, -0.3]).unwrap(), -0.2).unwrap();
        let spec = gaussian(vec![0.1, -0.1], vec![0.8, 1.7]);
        let x = Vector::new(vec![0.4, 0.2]).unwrap();
        let cfg = CertifyConfig {
            n0: 64,
            n: 20_000,
            confidence_alpha: 0.001,
            batch_size: 100,
            seed: 7,
        };
        let base = certify_with_workers(&f, &x, &spec, &cfg, rng_stream(7, 0), 1).unwrap();
        for workers in [2, 4, 7] {
            let other =
                certify_with_workers(&f, &x, &spec, &cfg, rng_stream(7, 0), workers).unwrap();
            assert_eq!(base, other);
        }
    }

    #[test]
    fn equal_scale_spec_matches_isotropic_stream_for_stream() {
        let f = threshold_1d();
        let x = Vector::zeros(1);
        let iso = NoiseSpec::isotropic_gaussian(1, 0.5).unwrap();
        let aniso = gaussian(vec![0.0], vec![0.5]);
        let a = classify_samples(&f, &x, &iso, 5000, rng_stream(8, 8)).unwrap();
        let b = classify_samples(&f, &x, &aniso, 5000, rng_stream(8, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn certify_validates_config() {
        let f = Constant {
            class: 0,
            classes: 2,
            dim: 1,
        };
        let spec = NoiseSpec::isotropic_gaussian(1, 1.0).unwrap();
        let cfg = CertifyConfig {
            n0: 100,
            n: 10,
            confidence_alpha: 0.001,
            batch_size: 10,
            seed: 0,
        };
        assert!(certify(&f, &Vector::zeros(1), &spec, &cfg, rng_stream(0, 0)).is_err());
    }
}
