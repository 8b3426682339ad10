use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgproc::{to_u8, Image};
use crate::rng::Rng;

/// Multi-modal toy image set: one Gaussian blob per image at one of
/// `k_modes` fixed positions, scaled into an intensity band, plus noise.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyDatasetSpec {
    pub k_modes: usize,
    pub side: usize,
    pub blob_sigma: f64,
    /// `(low, high)` background and peak intensity.
    pub intensity_band: (f64, f64),
    pub noise_sigma: f64,
    pub n: usize,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        ToyDatasetSpec { k_modes: 4, side: 16, blob_sigma: 2.0, intensity_band: (20.0, 80.0), noise_sigma: 3.0, n: 400 }
    }
}

impl ToyDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_modes == 0 {
            return Err(Error::invalid("k_modes must be at least 1"));
        }
        if self.side == 0 {
            return Err(Error::invalid("image side must be positive"));
        }
        if !(self.blob_sigma > 0.0) || !self.blob_sigma.is_finite() {
            return Err(Error::invalid(format!("blob_sigma must be positive, got {}", self.blob_sigma)));
        }
        let (lo, hi) = self.intensity_band;
        if !(0.0..=255.0).contains(&lo) || !(0.0..=255.0).contains(&hi) || lo >= hi {
            return Err(Error::invalid(format!("intensity band ({lo}, {hi}) must satisfy 0 <= low < high <= 255")));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid(format!("noise_sigma must be non-negative, got {}", self.noise_sigma)));
        }
        Ok(())
    }

    /// Blob centers in pixel coordinates. A single mode sits at the image
    /// center; otherwise modes are evenly spaced on a circle of radius side/4.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        let c = self.side as f64 / 2.0;
        if self.k_modes == 1 {
            return vec![(c, c)];
        }
        let r = self.side as f64 / 4.0;
        (0..self.k_modes)
            .map(|k| {
                let a = TAU * k as f64 / self.k_modes as f64;
                (c + r * a.cos(), c + r * a.sin())
            })
            .collect()
    }
}

pub fn make_toy_dataset(spec: &ToyDatasetSpec, seed: u64) -> Result<Vec<Image>> {
    spec.validate()?;
    let centers = spec.centers();
    let (lo, hi) = spec.intensity_band;
    let two_var = 2.0 * spec.blob_sigma * spec.blob_sigma;
    let mut rng = Rng::new(seed);
    (0..spec.n)
        .map(|_| {
            let (cx, cy) = centers[rng.below(centers.len())];
            Image::from_fn(spec.side, spec.side, |x, y| {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let v = lo + (hi - lo) * (-(dx * dx + dy * dy) / two_var).exp();
                let noise = if spec.noise_sigma > 0.0 { spec.noise_sigma * rng.normal() } else { 0.0 };
                to_u8(v + noise)
            })
        })
        .collect()
}
