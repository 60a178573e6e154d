//! Desk-scale differentiable models: the MLP classifier, the two-headed
//! noise generator, their training objective, and the PGD pre-perturbation
//! attack.

mod attack;
mod checkpoint;
mod generator;
mod loss;
mod mlp;
mod tape;
mod train;

pub use attack::{input_gradient, pgd_attack};
pub use checkpoint::{
    load_classifier, load_generator, save_classifier, save_generator, SCHEMA_VERSION,
};
pub use generator::{GeneratorBounds, NoiseGenNet};
pub use loss::{
    mean_loss, smoothing_loss, total_loss_and_grads, variance_loss, Grads, LossWeights,
    TrainConfig,
};
pub use mlp::{Mlp, LEAKY_SLOPE};
pub use tape::{Tape, Var};
pub use train::train;
