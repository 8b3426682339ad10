//! Fully-connected networks with manual backprop, BCE loss and Adam.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_model, save_model, MAGIC};
pub use gradcheck::{grad_check, CheckLoss};
pub use loss::{bce_loss, BCE_CLAMP};
pub use mlp::{Activation, Backprop, Dense, ForwardCache, Gradients, MlpModel, LEAKY_SLOPE};

/// Default weight initialization scale, `N(0, 0.02²)`.
pub const INIT_STD: f64 = 0.02;
