//! Closed-form certified-radius calculators.
//!
//! Each function is pure. Probabilities are clamped away from {0, 1} before
//! any quantile transform so radii stay finite even when Monte Carlo
//! estimates saturate.

use crate::core::{clamp_probability, Vector};
use crate::error::{Error, Result};
use crate::noise::std_normal_quantile;

/// A lower bound on the top-class probability paired with an upper bound on
/// the runner-up probability, ordered `pb_upper <= pa_lower`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBounds {
    pa_lower: f64,
    pb_upper: f64,
}

impl ProbabilityBounds {
    pub fn new(pa_lower: f64, pb_upper: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&pa_lower)
            && (0.0..=1.0).contains(&pb_upper)
            && pb_upper <= pa_lower;
        if !ok {
            return Err(Error::InvalidBounds { pa_lower, pb_upper });
        }
        Ok(Self { pa_lower, pb_upper })
    }

    /// Multiclass bounds from a single estimated lower bound: the runner-up
    /// can hold at most the remaining mass.
    pub fn from_pa_lower(pa_lower: f64) -> Result<Self> {
        Self::new(pa_lower, 1.0 - pa_lower)
    }

    pub fn pa_lower(&self) -> f64 {
        self.pa_lower
    }

    pub fn pb_upper(&self) -> f64 {
        self.pb_upper
    }
}

impl ProbabilityBounds {
    /// Quantile bracket Phi^-1(pa) - Phi^-1(pb), clamped before inversion.
    fn quantile_bracket(&self) -> f64 {
        let qa = std_normal_quantile(clamp_probability(self.pa_lower))
            .expect("clamped probability is in (0,1)");
        let qb = std_normal_quantile(clamp_probability(self.pb_upper))
            .expect("clamped probability is in (0,1)");
        (qa - qb).max(0.0)
    }
}

fn check_scales(scale: &Vector) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (index, s) in scale.as_slice().iter().enumerate() {
        if !(*s > 0.0) {
            return Err(Error::NonPositiveScale { index });
        }
        min = min.min(*s);
    }
    Ok(min)
}

/// l2 radius for isotropic Gaussian smoothing with standard deviation
/// `sigma`: sigma/2 * (Phi^-1(pa) - Phi^-1(pb)).
pub fn radius_iso_gaussian(sigma: f64, bounds: &ProbabilityBounds) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveScale { index: 0 });
    }
    Ok(0.5 * sigma * bounds.quantile_bracket())
}

/// l2 radius for anisotropic Gaussian smoothing:
/// min(sigma_i)/2 * (Phi^-1(pa) - Phi^-1(pb)).
///
/// Only the smallest scale enters; with all scales equal this reduces to the
/// isotropic radius exactly.
pub fn radius_aniso_gaussian(scale: &Vector, bounds: &ProbabilityBounds) -> Result<f64> {
    let min = check_scales(scale)?;
    Ok(0.5 * min * bounds.quantile_bracket())
}

/// l2 radius for the binary case: min(sigma_i) * Phi^-1(pa), valid for
/// pa_lower >= 1/2.
pub fn radius_binary_gaussian(scale: &Vector, pa_lower: f64) -> Result<f64> {
    let min = check_scales(scale)?;
    if !(pa_lower >= 0.5) {
        return Err(Error::BelowHalf(pa_lower));
    }
    if pa_lower == 0.5 {
        return Ok(0.0);
    }
    let q = std_normal_quantile(clamp_probability(pa_lower))
        .expect("clamped probability is in (0,1)");
    Ok(min * q.max(0.0))
}

/// l1 radius for anisotropic Laplace smoothing: the larger of
/// min(lambda_i)/2 * log(pa/pb) and -min(lambda_i) * log(1 - pa + pb).
pub fn radius_aniso_laplace(scale: &Vector, bounds: &ProbabilityBounds) -> Result<f64> {
    let min = check_scales(scale)?;
    let pa = bounds.pa_lower();
    let pb = bounds.pb_upper();
    if !(pa > 0.0 && pb > 0.0) {
        return Err(Error::InvalidBounds {
            pa_lower: pa,
            pb_upper: pb,
        });
    }
    let pa = clamp_probability(pa);
    let pb = clamp_probability(pb);
    let branch_ratio = 0.5 * min * (pa / pb).ln();
    let complement = (1.0 - pa + pb).max(crate::core::PROB_CLAMP);
    let branch_complement = -min * complement.ln();
    Ok(branch_ratio.max(branch_complement).max(0.0))
}
