//! Shared domain types, validation, and deterministic randomness contracts.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Random streams are created per worker and never shared.

mod rng;

pub use rng::{rng_stream, RngStream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to this interval before quantile transforms;
/// the standard normal quantile diverges at 0 and 1.
pub const PROB_CLAMP: f64 = 1e-12;

/// Clamps a probability into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
#[inline]
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// A finite real vector with at least one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting empty input and any NaN/Inf entry.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (index, v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        Ok(Self { entries })
    }

    /// All-zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Euclidean norm.
    pub fn norm_l2(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of absolute entries.
    pub fn norm_l1(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Entry-wise sum; dimensions must match.
    pub fn add(&self, other: &Vector) -> Result<Vector> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Vector::new(
            self.entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.entries
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// A class index, validated against the number of classes at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(usize);

impl Label {
    pub fn new(index: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::OutOfRange(format!(
                "num_classes must be at least 2, got {num_classes}"
            )));
        }
        if index >= num_classes {
            return Err(Error::OutOfRange(format!(
                "label {index} out of range for {num_classes} classes"
            )));
        }
        Ok(Label(index))
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Noise family applied per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
}

/// Per-dimension noise distribution: a family, a mean vector, and a scale
/// vector (standard deviations for Gaussian, diversities for Laplace).
///
/// The Gaussian covariance is diagonal by construction: `diag(scale^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    family: NoiseFamily,
    mean: Vector,
    scale: Vector,
}

impl NoiseSpec {
    /// Builds a spec; mean and scale must share a dimension and every scale
    /// entry must be strictly positive.
    pub fn new(family: NoiseFamily, mean: Vector, scale: Vector) -> Result<Self> {
        if mean.dim() != scale.dim() {
            return Err(Error::DimensionMismatch {
                expected: mean.dim(),
                got: scale.dim(),
            });
        }
        for (index, s) in scale.as_slice().iter().enumerate() {
            if *s <= 0.0 {
                return Err(Error::NonPositiveScale { index });
            }
        }
        Ok(Self {
            family,
            mean,
            scale,
        })
    }

    /// Zero-mean Gaussian with one shared standard deviation.
    pub fn isotropic_gaussian(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(
            NoiseFamily::Gaussian,
            Vector::zeros(dim),
            Vector::new(vec![sigma; dim])?,
        )
    }

    /// Zero-mean Laplace with one shared diversity.
    pub fn isotropic_laplace(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(
            NoiseFamily::Laplace,
            Vector::zeros(dim),
            Vector::new(vec![lambda; dim])?,
        )
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn scale(&self) -> &Vector {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// Minimum scale entry; strictly positive for any constructed spec.
    pub fn min_scale(&self) -> f64 {
        self.scale
            .as_slice()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks a noise spec against the input dimension it will smooth.
pub fn validate_noise_spec(spec: &NoiseSpec, input_dim: usize) -> Result<()> {
    if spec.dim() != input_dim {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            got: spec.dim(),
        });
    }
    for (index, s) in spec.scale.as_slice().iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFiniteEntry { index });
        }
        if *s <= 0.0 {
            return Err(Error::NonPositiveScale { index });
        }
    }
    for (index, m) in spec.mean.as_slice().iter().enumerate() {
        if !m.is_finite() {
            return Err(Error::NonFiniteEntry { index });
        }
    }
    Ok(())
}

/// Monte Carlo certification parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    /// Samples used to select the candidate top class.
    pub n0: u64,
    /// Samples used to estimate the class-probability lower bound.
    pub n: u64,
    /// One-sided error budget of the certificate.
    pub confidence_alpha: f64,
    /// Upper bound on the number of samples evaluated per work unit.
    pub batch_size: u64,
    /// Seed for all Monte Carlo streams.
    pub seed: u64,
}

impl CertifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 < 1 || self.n < self.n0 {
            return Err(Error::ConfigError(format!(
                "need n >= n0 >= 1, got n0={}, n={}",
                self.n0, self.n
            )));
        }
        if !(self.confidence_alpha > 0.0 && self.confidence_alpha < 1.0) {
            return Err(Error::ConfigError(format!(
                "confidence_alpha must lie in (0,1), got {}",
                self.confidence_alpha
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::ConfigError("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Norm in which a certificate's radius is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

/// A successful certification: a label that provably does not change within
/// `radius` of the input (in `norm`), backed by the probability bound
/// `pa_lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub label: Label,
    pub radius: f64,
    pub pa_lower: f64,
    pub norm: Norm,
}

/// Result of a certification attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CertifyOutcome {
    Certified(Certificate),
    Abstain,
}

impl CertifyOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            CertifyOutcome::Abstain => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::Certified(_))
    }
}
