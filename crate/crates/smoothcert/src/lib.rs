//! smoothcert: a certification engine for randomized smoothing with
//! per-dimension (anisotropic) Gaussian or Laplace noise.
//!
//! The crate computes provable l2/l1 robustness radii for smoothed
//! classifiers via Monte Carlo estimation with exact binomial confidence
//! bounds, checks every radius formula against analytic half-space
//! oracles, and trains a small noise generator that tunes per-dimension
//! noise means and scales.

pub mod core;
pub mod noise;
pub mod radius;
pub mod certify;
pub mod oracle;
pub mod net;
pub mod harness;

mod error;

pub use error::{Error, Result};
