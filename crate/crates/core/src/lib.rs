//! Adaptive input-image normalization for GAN training, together with the
//! diversity metrics (MS-SSIM, FID), a small fully-connected GAN trainer and a
//! downstream classifier harness used to judge synthetic-data utility.

pub mod error;
pub mod evalharness;
pub mod frechet;
pub mod gantrain;
pub mod imgproc;
pub mod linalg;
pub mod neural;
pub mod rng;
pub mod similarity;

pub use error::{Error, Result};
