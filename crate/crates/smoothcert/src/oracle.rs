//! Analytic ground truth for the radius formulas: half-space worst-case
//! classifiers, exact smoothed probabilities under Gaussian noise, the
//! flip condition that makes the Gaussian radius tight, and the statistic
//! driving the Laplace bound.
//!
//! Everything here is closed form; no Monte Carlo error enters the
//! tightness and soundness assertions built on this module.

use crate::certify::BaseClassifier;
use crate::core::{rng_stream, Label, NoiseFamily, NoiseSpec, Vector};
use crate::error::{Error, Result};
use crate::noise::{std_normal_cdf, std_normal_quantile};
use crate::radius::{radius_aniso_laplace, radius_binary_gaussian, ProbabilityBounds};

/// Seed for the deterministic direction grids.
const DIRECTION_SEED: u64 = 0x5EED_D112;

/// Binary linear classifier: class 1 iff `w . z >= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weight: Vector,
    bias: f64,
}

impl LinearClassifier {
    pub fn new(weight: Vector, bias: f64) -> Result<Self> {
        if weight.as_slice().iter().all(|w| *w == 0.0) {
            return Err(Error::ZeroWeight);
        }
        if !bias.is_finite() {
            return Err(Error::NonFiniteInput(bias));
        }
        Ok(Self { weight, bias })
    }

    pub fn weight(&self) -> &Vector {
        &self.weight
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }
}

impl BaseClassifier for LinearClassifier {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.weight.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Label {
        let dot: f64 = self
            .weight
            .as_slice()
            .iter()
            .zip(x.iter())
            .map(|(w, v)| w * v)
            .sum();
        Label::new(usize::from(dot >= self.bias), 2).unwrap()
    }
}

/// Exact probability that a linear classifier answers class 1 on `x + eps`
/// with Gaussian `eps`: Phi((w.(x + mu) - b) / sqrt(sum w_i^2 sigma_i^2)).
pub fn smoothed_prob_linear(f: &LinearClassifier, x: &Vector, spec: &NoiseSpec) -> Result<f64> {
    if spec.family() != NoiseFamily::Gaussian {
        return Err(Error::OutOfDomain(
            "smoothed_prob_linear requires a Gaussian spec".into(),
        ));
    }
    if x.dim() != f.input_dim() || spec.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.input_dim(),
            got: x.dim().max(spec.dim()),
        });
    }
    let w = f.weight.as_slice();
    let mu = spec.mean().as_slice();
    let sigma = spec.scale().as_slice();
    let mut shift = -f.bias;
    let mut var = 0.0;
    for i in 0..w.len() {
        shift += w[i] * (x[i] + mu[i]);
        var += w[i] * w[i] * sigma[i] * sigma[i];
    }
    if var == 0.0 {
        return Err(Error::ZeroWeight);
    }
    std_normal_cdf(shift / var.sqrt())
}

/// Exact probability that the worst-case half-space calibrated to `pa`
/// still captures the smoothed point after the input shifts by `delta`:
/// Phi(Phi^-1(pa) - sqrt(sum delta_i^2 / sigma_i^2)).
pub fn shifted_halfspace_prob(pa: f64, delta: &Vector, scale: &Vector) -> Result<f64> {
    if !(pa > 0.0 && pa < 1.0) {
        return Err(Error::OutOfDomain(format!("pa must lie in (0,1), got {pa}")));
    }
    if delta.dim() != scale.dim() {
        return Err(Error::DimensionMismatch {
            expected: scale.dim(),
            got: delta.dim(),
        });
    }
    let mut q = 0.0;
    for (i, (d, s)) in delta
        .as_slice()
        .iter()
        .zip(scale.as_slice().iter())
        .enumerate()
    {
        if !(*s > 0.0) {
            return Err(Error::NonPositiveScale { index: i });
        }
        q += (d / s) * (d / s);
    }
    std_normal_cdf(std_normal_quantile(pa)? - q.sqrt())
}

/// The worst-case half-space attaining probability `pa` under the smoothing
/// distribution centered at `base_point`, oriented along `direction`.
///
/// The set is `{ z : sum_i direction_i / sigma_i^2 (z_i - mu_i - x_i) <=
/// threshold }` with the threshold calibrated so the smoothed mass is
/// exactly `pa`.
#[derive(Debug, Clone)]
pub struct HalfSpaceOracle {
    base_point: Vector,
    spec: NoiseSpec,
    pa: f64,
    direction: Vector,
    threshold: f64,
}

impl HalfSpaceOracle {
    pub fn new(base_point: Vector, spec: NoiseSpec, pa: f64, direction: Vector) -> Result<Self> {
        if spec.family() != NoiseFamily::Gaussian {
            return Err(Error::OutOfDomain(
                "half-space oracle requires a Gaussian spec".into(),
            ));
        }
        if !(pa > 0.0 && pa < 1.0) {
            return Err(Error::OutOfDomain(format!("pa must lie in (0,1), got {pa}")));
        }
        if base_point.dim() != spec.dim() || direction.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: base_point.dim().max(direction.dim()),
            });
        }
        if direction.as_slice().iter().all(|d| *d == 0.0) {
            return Err(Error::ZeroWeight);
        }
        let threshold = Self::functional_std(&direction, &spec) * std_normal_quantile(pa)?;
        Ok(Self {
            base_point,
            spec,
            pa,
            direction,
            threshold,
        })
    }

    /// Standard deviation of the defining linear functional under the
    /// smoothing distribution: sqrt(sum direction_i^2 / sigma_i^2).
    fn functional_std(direction: &Vector, spec: &NoiseSpec) -> f64 {
        direction
            .as_slice()
            .iter()
            .zip(spec.scale().as_slice().iter())
            .map(|(d, s)| (d / s) * (d / s))
            .sum::<f64>()
            .sqrt()
    }

    pub fn pa(&self) -> f64 {
        self.pa
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Membership in the calibrated half-space.
    pub fn contains(&self, z: &[f64]) -> bool {
        let x = self.base_point.as_slice();
        let mu = self.spec.mean().as_slice();
        let sigma = self.spec.scale().as_slice();
        let mut functional = 0.0;
        for (i, d) in self.direction.as_slice().iter().enumerate() {
            functional += d / (sigma[i] * sigma[i]) * (z[i] - mu[i] - x[i]);
        }
        functional <= self.threshold
    }

    /// Exact mass of the half-space when the input is shifted by `shift`:
    /// the smoothing distribution becomes N(x + mu + shift, Sigma).
    pub fn prob_under_shift(&self, shift: &[f64]) -> Result<f64> {
        if shift.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: shift.len(),
            });
        }
        let sigma = self.spec.scale().as_slice();
        let mut mean = 0.0;
        for (i, d) in self.direction.as_slice().iter().enumerate() {
            mean += d / (sigma[i] * sigma[i]) * shift[i];
        }
        let s = Self::functional_std(&self.direction, &self.spec);
        std_normal_cdf((self.threshold - mean) / s)
    }

    /// Exact mass at the base point itself; equals `pa` by calibration.
    pub fn prob_at_base(&self) -> Result<f64> {
        self.prob_under_shift(&vec![0.0; self.spec.dim()])
    }

    /// The half-space as a linear classifier (class 1 = inside the set).
    pub fn as_linear_classifier(&self) -> LinearClassifier {
        let x = self.base_point.as_slice();
        let mu = self.spec.mean().as_slice();
        let sigma = self.spec.scale().as_slice();
        let mut weight = Vec::with_capacity(self.spec.dim());
        let mut offset = 0.0;
        for (i, d) in self.direction.as_slice().iter().enumerate() {
            let coeff = d / (sigma[i] * sigma[i]);
            weight.push(-coeff);
            offset += coeff * (x[i] + mu[i]);
        }
        // L(z) <= t  <=>  -L(z) >= -t
        LinearClassifier::new(
            Vector::new(weight).expect("direction is nonzero"),
            -(self.threshold + offset),
        )
        .expect("direction is nonzero")
    }
}

impl BaseClassifier for HalfSpaceOracle {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.spec.dim()
    }

    fn evaluate(&self, z: &[f64]) -> Label {
        Label::new(usize::from(self.contains(z)), 2).unwrap()
    }
}

/// Deterministic quasi-uniform unit directions (l2-normalized Gaussian
/// draws with a fixed seed).
pub fn l2_directions(dim: usize, count: usize) -> Vec<Vector> {
    normalized_directions(dim, count, |v| {
        v.iter().map(|e| e * e).sum::<f64>().sqrt()
    })
}

/// Deterministic directions on the l1 unit sphere.
pub fn l1_directions(dim: usize, count: usize) -> Vec<Vector> {
    normalized_directions(dim, count, |v| v.iter().map(|e| e.abs()).sum::<f64>())
}

fn normalized_directions(dim: usize, count: usize, norm: impl Fn(&[f64]) -> f64) -> Vec<Vector> {
    let mut stream = rng_stream(DIRECTION_SEED, dim as u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = vec![0.0; dim];
        crate::noise::fill_standard(NoiseFamily::Gaussian, &mut v, &mut stream);
        let n = norm(&v);
        if n < 1e-9 {
            continue;
        }
        for e in v.iter_mut() {
            *e /= n;
        }
        out.push(Vector::new(v).expect("normalized direction is finite"));
    }
    out
}

/// Verifies that the binary Gaussian radius is both sound and tight for the
/// worst-case half-space calibrated to `pa`:
///
/// (a) at radius `R (1 - margin)`, 64 directions all keep the half-space
///     mass above 1/2, and
/// (b) stepping past `R` along the minimum-sigma axis drops it to 1/2 or
///     below.
pub fn worst_case_flip_check(pa: f64, scale: &Vector, margin: f64) -> Result<bool> {
    if !(pa > 0.5 && pa < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "flip check requires pa in (1/2, 1), got {pa}"
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let radius = radius_binary_gaussian(scale, pa)?;
    let dim = scale.dim();

    for direction in l2_directions(dim, 64) {
        let delta = Vector::new(
            direction
                .as_slice()
                .iter()
                .map(|u| u * radius * (1.0 - margin))
                .collect(),
        )?;
        if !(shifted_halfspace_prob(pa, &delta, scale)? > 0.5) {
            return Ok(false);
        }
    }

    let axis = scale
        .as_slice()
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut past = vec![0.0; dim];
    past[axis] = radius * (1.0 + margin);
    let prob_past = shifted_halfspace_prob(pa, &Vector::new(past)?, scale)?;
    Ok(prob_past <= 0.5)
}

/// The likelihood-ratio statistic of the anisotropic Laplace proof:
/// T(z) = sum_i (|z_i - delta_i| - |z_i|) / lambda_i.
pub fn laplace_statistic(z: &Vector, delta: &Vector, scale: &Vector) -> Result<f64> {
    if z.dim() != delta.dim() || z.dim() != scale.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: delta.dim().max(scale.dim()),
        });
    }
    let mut t = 0.0;
    for i in 0..z.dim() {
        t += ((z[i] - delta[i]).abs() - z[i].abs()) / scale[i];
    }
    Ok(t)
}

/// Triangle-inequality envelope for [`laplace_statistic`]:
/// sum_i |delta_i| / lambda_i.
pub fn laplace_statistic_bound(delta: &Vector, scale: &Vector) -> Result<f64> {
    if delta.dim() != scale.dim() {
        return Err(Error::DimensionMismatch {
            expected: scale.dim(),
            got: delta.dim(),
        });
    }
    Ok(delta
        .as_slice()
        .iter()
        .zip(scale.as_slice().iter())
        .map(|(d, l)| d.abs() / l)
        .sum())
}

/// Confirms both branch conditions behind the Laplace radius: just inside
/// the certified l1 ball, the guaranteed lower bound on the top-class mass
/// (direct or complement form) must still dominate the guaranteed upper
/// bound on the runner-up mass, along 64 l1 directions.
pub fn laplace_soundness_check(pa: f64, pb: f64, scale: &Vector) -> Result<bool> {
    if !(pa > 0.0 && pa < 1.0 && pb > 0.0 && pb < 1.0) || pb > pa {
        return Err(Error::InvalidBounds {
            pa_lower: pa,
            pb_upper: pb,
        });
    }
    let bounds = ProbabilityBounds::new(pa, pb)?;
    let radius = radius_aniso_laplace(scale, &bounds)?;
    if radius == 0.0 {
        return Ok(true);
    }
    let dim = scale.dim();
    for direction in l1_directions(dim, 64) {
        let magnitude = radius * (1.0 - 1e-6);
        let exponent: f64 = direction
            .as_slice()
            .iter()
            .zip(scale.as_slice().iter())
            .map(|(u, l)| (u * magnitude).abs() / l)
            .sum();
        let lower_direct = (-exponent).exp() * pa;
        let lower_complement = 1.0 - exponent.exp() * (1.0 - pa);
        let upper = exponent.exp() * pb;
        if !(lower_direct.max(lower_complement) >= upper) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::classify_samples;
    use crate::core::rng_stream;

    fn gaussian(mean: Vec<f64>, scale: Vec<f64>) -> NoiseSpec {
        NoiseSpec::new(
            NoiseFamily::Gaussian,
            Vector::new(mean).unwrap(),
            Vector::new(scale).unwrap(),
        )
        .unwrap()
    }

    fn vec_of(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn linear_classifier_rejects_zero_weight() {
        assert!(matches!(
            LinearClassifier::new(Vector::new(vec![0.0, 0.0]).unwrap(), 1.0),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn smoothed_prob_examples() {
        let f = LinearClassifier::new(vec_of(&[1.0, 0.0]), 0.0).unwrap();
        let spec = gaussian(vec![0.0, 0.0], vec![1.0, 1.0]);
        let p = smoothed_prob_linear(&f, &Vector::zeros(2), &spec).unwrap();
        assert!((p - 0.5).abs() < 1e-15);

        let p = smoothed_prob_linear(&f, &vec_of(&[1.0, 0.0]), &spec).unwrap();
        assert!((p - 0.8413447460685429).abs() < 1e-12);

        let f = LinearClassifier::new(vec_of(&[1.0, 1.0]), 0.0).unwrap();
        let spec = gaussian(vec![1.0, 0.0], vec![1.0, 2.0]);
        let p = smoothed_prob_linear(&f, &Vector::zeros(2), &spec).unwrap();
        let expect = std_normal_cdf(1.0 / 5.0f64.sqrt()).unwrap();
        assert!((p - expect).abs() < 1e-15);
        assert!((p - 0.67264).abs() < 1e-5);
    }

    #[test]
    fn monte_carlo_matches_analytic_probability() {
        // Fuzzed linear classifiers: sampled frequency within 5 standard
        // errors of the closed form, n = 1e6 per case.
        const N: u64 = 1_000_000;
        const CASES: usize = 100;
        let mut fuzz = rng_stream(0xFACE, 0);
        for case in 0..CASES {
            let dim = 1 + (fuzz.next_u64() % 3) as usize;
            let draw = |s: &mut crate::core::RngStream| s.next_uniform() * 2.0 - 1.0;
            let weight: Vec<f64> = (0..dim).map(|_| draw(&mut fuzz) * 2.0).collect();
            if weight.iter().all(|w| w.abs() < 1e-3) {
                continue;
            }
            let x: Vec<f64> = (0..dim).map(|_| draw(&mut fuzz)).collect();
            let mu: Vec<f64> = (0..dim).map(|_| draw(&mut fuzz) * 0.5).collect();
            let sigma: Vec<f64> = (0..dim).map(|_| 0.3 + fuzz.next_uniform() * 1.7).collect();

            let f = LinearClassifier::new(vec_of(&weight), draw(&mut fuzz)).unwrap();
            let spec = gaussian(mu, sigma);
            let x = vec_of(&x);
            let p = smoothed_prob_linear(&f, &x, &spec).unwrap();
            if !(0.005..=0.995).contains(&p) {
                continue; // keep the normal-approximation tolerance honest
            }
            let counts =
                classify_samples(&f, &x, &spec, N, rng_stream(0xBEEF, case as u64)).unwrap();
            let freq = counts.count(1) as f64 / N as f64;
            let tol = 5.0 * (p * (1.0 - p) / N as f64).sqrt();
            assert!(
                (freq - p).abs() <= tol,
                "case {case}: freq={freq}, p={p}, tol={tol}"
            );
        }
    }

    #[test]
    fn shifted_halfspace_examples() {
        let pa = 0.77;
        let p = shifted_halfspace_prob(pa, &vec_of(&[0.0, 0.0]), &vec_of(&[1.0, 2.0])).unwrap();
        assert!((p - pa).abs() < 1e-12);

        let pa = std_normal_cdf(2.0).unwrap();
        let p = shifted_halfspace_prob(pa, &vec_of(&[2.0, 0.0]), &vec_of(&[1.0, 1.0])).unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        let p = shifted_halfspace_prob(pa, &vec_of(&[0.0, 2.0]), &vec_of(&[1.0, 2.0])).unwrap();
        let expect = std_normal_cdf(1.0).unwrap();
        assert!((p - expect).abs() < 1e-12);
    }

    #[test]
    fn halfspace_calibration_is_exact() {
        // P(X in A) must equal pa through two independent formula routes.
        let spec = gaussian(vec![0.3, -0.2, 0.05], vec![0.5, 1.0, 2.5]);
        let x = vec_of(&[0.2, 0.7, -1.0]);
        for &pa in &[0.51, 0.6, 0.75, 0.9, 0.99] {
            for direction in l2_directions(3, 8) {
                let oracle =
                    HalfSpaceOracle::new(x.clone(), spec.clone(), pa, direction).unwrap();
                assert!((oracle.prob_at_base().unwrap() - pa).abs() < 1e-12);
                let linear = oracle.as_linear_classifier();
                let via_linear = smoothed_prob_linear(&linear, &x, &spec).unwrap();
                assert!((via_linear - pa).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halfspace_shift_matches_eq_27_form() {
        let spec = gaussian(vec![0.0, 0.0], vec![1.0, 3.0]);
        let x = vec_of(&[0.5, -0.5]);
        let pa = 0.85;
        for direction in l2_directions(2, 16) {
            let oracle = HalfSpaceOracle::new(x.clone(), spec.clone(), pa, direction.clone())
                .unwrap();
            for &r in &[0.1, 0.5, 1.3] {
                let shift: Vec<f64> = direction.as_slice().iter().map(|u| u * r).collect();
                let via_oracle = oracle.prob_under_shift(&shift).unwrap();
                let via_formula =
                    shifted_halfspace_prob(pa, &vec_of(&shift), spec.scale()).unwrap();
                assert!((via_oracle - via_formula).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halfspace_monte_carlo_agreement() {
        const N: u64 = 400_000;
        let spec = gaussian(vec![0.1, -0.3], vec![0.8, 1.6]);
        let x = vec_of(&[0.4, 0.9]);
        let pa = 0.73;
        let direction = vec_of(&[0.6, -0.8]);
        let oracle = HalfSpaceOracle::new(x.clone(), spec.clone(), pa, direction).unwrap();
        let counts = classify_samples(&oracle, &x, &spec, N, rng_stream(0xABCD, 0)).unwrap();
        let freq = counts.count(1) as f64 / N as f64;
        let tol = 5.0 * (pa * (1.0 - pa) / N as f64).sqrt();
        assert!((freq - pa).abs() <= tol, "freq={freq}, pa={pa}");
    }

    #[test]
    fn flip_check_examples() {
        let pa = std_normal_cdf(1.0).unwrap();
        assert!(worst_case_flip_check(pa, &vec_of(&[1.0, 1.0, 1.0]), 1e-6).unwrap());

        let pa = std_normal_cdf(2.0).unwrap();
        assert!(worst_case_flip_check(pa, &vec_of(&[1.0, 10.0]), 1e-6).unwrap());

        assert!(worst_case_flip_check(0.5 + 1e-9, &vec_of(&[0.3, 2.0]), 0.5).unwrap());
    }

    #[test]
    fn flip_check_grid() {
        let pa_grid = [
            0.51,
            0.6,
            0.75,
            0.9,
            0.99,
            std_normal_cdf(3.0).unwrap(),
        ];
        let scales: [&[f64]; 3] = [&[1.0, 1.0], &[0.5, 2.0], &[0.12, 1.0, 7.0]];
        for pa in pa_grid {
            for scale in scales {
                assert!(
                    worst_case_flip_check(pa, &vec_of(scale), 1e-5).unwrap(),
                    "pa={pa}, scale={scale:?}"
                );
            }
        }
    }

    #[test]
    fn flip_check_domain() {
        assert!(worst_case_flip_check(0.5, &vec_of(&[1.0]), 1e-6).is_err());
        assert!(worst_case_flip_check(0.9, &vec_of(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn laplace_statistic_examples() {
        assert_eq!(
            laplace_statistic(&vec_of(&[1.0, 2.0]), &vec_of(&[0.0, 0.0]), &vec_of(&[1.0, 1.0]))
                .unwrap(),
            0.0
        );
        assert_eq!(
            laplace_statistic(&vec_of(&[5.0]), &vec_of(&[1.0]), &vec_of(&[1.0])).unwrap(),
            -1.0
        );
    }

    #[test]
    fn laplace_statistic_respects_envelope() {
        let mut fuzz = rng_stream(0x1A91ACE, 0);
        for _ in 0..10_000 {
            let dim = 1 + (fuzz.next_u64() % 4) as usize;
            let z: Vec<f64> = (0..dim).map(|_| fuzz.next_uniform() * 8.0 - 4.0).collect();
            let delta: Vec<f64> = (0..dim).map(|_| fuzz.next_uniform() * 4.0 - 2.0).collect();
            let lam: Vec<f64> = (0..dim).map(|_| 0.1 + fuzz.next_uniform() * 3.0).collect();
            let t = laplace_statistic(&vec_of(&z), &vec_of(&delta), &vec_of(&lam)).unwrap();
            let bound = laplace_statistic_bound(&vec_of(&delta), &vec_of(&lam)).unwrap();
            assert!(
                -bound - 1e-12 <= t && t <= bound + 1e-12,
                "T={t} outside [-{bound}, {bound}]"
            );
        }
    }

    #[test]
    fn laplace_soundness_examples() {
        assert!(laplace_soundness_check(0.9, 0.1, &vec_of(&[1.0, 1.0])).unwrap());
        assert!(laplace_soundness_check(0.4, 0.4, &vec_of(&[2.0])).unwrap());
        assert!(laplace_soundness_check(0.8, 0.2, &vec_of(&[1.0, 3.0])).unwrap());
    }

    #[test]
    fn laplace_soundness_axis_bounds() {
        // With all l1 mass on one axis, both exponent bounds must hold and
        // the small-lambda axis is the binding one.
        let (pa, pb) = (0.8, 0.2);
        let scale = vec_of(&[1.0, 3.0]);
        let bounds = ProbabilityBounds::new(pa, pb).unwrap();
        let radius = radius_aniso_laplace(&scale, &bounds).unwrap();
        let r = radius * (1.0 - 1e-6);
        let check_axis = |lam: f64| -> (f64, f64) {
            let d = r / lam;
            let lower = ((-d).exp() * pa).max(1.0 - d.exp() * (1.0 - pa));
            (lower, d.exp() * pb)
        };
        let (lo_min, up_min) = check_axis(1.0);
        let (lo_max, up_max) = check_axis(3.0);
        assert!(lo_min >= up_min);
        assert!(lo_max >= up_max);
        // binding margin is smaller on the min-lambda axis
        assert!(lo_min - up_min <= lo_max - up_max);
    }

    #[test]
    fn direction_grids_are_normalized_and_deterministic() {
        let a = l2_directions(5, 64);
        let b = l2_directions(5, 64);
        assert_eq!(a, b);
        for d in &a {
            assert!((d.norm_l2() - 1.0).abs() < 1e-12);
        }
        for d in l1_directions(4, 64) {
            assert!((d.norm_l1() - 1.0).abs() < 1e-12);
        }
    }
}
