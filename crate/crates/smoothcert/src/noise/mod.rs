//! Anisotropic Gaussian/Laplace sampling and the scalar Gaussian special
//! functions every radius formula depends on.
//!
//! Sampling goes through the inverse CDF on a counter-based stream, so one
//! draw consumes exactly one uniform per dimension. That fixed budget is
//! what lets a sample index be replayed on any worker.

mod erf;

pub use erf::{erf, erfc};

use crate::core::{NoiseFamily, NoiseSpec, RngStream, Vector};
use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFiniteInput(z));
    }
    Ok(erf::phi(z))
}

/// Inverse standard normal CDF on the open interval (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "quantile requires p in (0,1), got {p}"
        )));
    }
    Ok(erf::inverse_phi(p))
}

/// One standard variate of the family: N(0,1) or Laplace(0,1).
#[inline]
pub fn standard_variate(family: NoiseFamily, stream: &mut RngStream) -> f64 {
    let u = stream.next_uniform();
    match family {
        NoiseFamily::Gaussian => erf::inverse_phi(u),
        NoiseFamily::Laplace => {
            if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            }
        }
    }
}

/// Fills `out` with `dim` standard variates, consuming exactly `dim` draws.
pub fn fill_standard(family: NoiseFamily, out: &mut [f64], stream: &mut RngStream) {
    for slot in out.iter_mut() {
        *slot = standard_variate(family, stream);
    }
}

/// Draws one noise vector from the spec: dimension `i` is distributed
/// Gaussian(mean_i, scale_i^2) or Laplace(mean_i, scale_i), independently.
pub fn sample(spec: &NoiseSpec, stream: &mut RngStream) -> Vector {
    let mean = spec.mean().as_slice();
    let scale = spec.scale().as_slice();
    let entries: Vec<f64> = mean
        .iter()
        .zip(scale.iter())
        .map(|(&m, &s)| m + s * standard_variate(spec.family(), stream))
        .collect();
    Vector::new(entries).expect("scaled standard variates are finite")
}

/// Adds one noise draw onto `x`, writing into `out`; consumes `x.len()`
/// draws from the stream.
pub fn sample_perturbed(spec: &NoiseSpec, x: &[f64], out: &mut [f64], stream: &mut RngStream) {
    let mean = spec.mean().as_slice();
    let scale = spec.scale().as_slice();
    for i in 0..x.len() {
        out[i] = x[i] + mean[i] + scale[i] * standard_variate(spec.family(), stream);
    }
}
