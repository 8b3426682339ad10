//! Structural similarity at one and several scales, the random-pair averaging
//! protocol, and the intra-class mode-collapse decision.
//!
//! Local statistics use an 11x11 Gaussian window (sigma 1.5) evaluated only
//! where the window fits inside the image. Contrast and structure are taken at
//! every scale, luminance only at the coarsest; scales are separated by 2x2
//! average pooling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgproc::Image;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimConfig {
    pub window_side: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig { window_side: 11, window_sigma: 1.5, k1: 0.01, k2: 0.03, dynamic_range: 255.0 }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn c3(&self) -> f64 {
        self.c2() / 2.0
    }

    fn validate(&self) -> Result<()> {
        if self.window_side.is_multiple_of(2) || self.window_side == 0 {
            return Err(Error::invalid("SSIM window side must be odd"));
        }
        if !(self.window_sigma > 0.0 && self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::invalid("SSIM constants must be positive"));
        }
        Ok(())
    }

    fn window(&self) -> Vec<f64> {
        let r = (self.window_side / 2) as isize;
        let taps: Vec<f64> = (-r..=r)
            .map(|i| (-((i * i) as f64) / (2.0 * self.window_sigma * self.window_sigma)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }
}

/// Spatial means of the luminance, contrast and structure terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimComponents {
    pub luminance: f64,
    pub contrast: f64,
    pub structure: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsSsimConfig {
    pub max_scales: usize,
    /// Exponent per scale, finest first; the last used weight also applies to
    /// luminance.
    pub weights: Vec<f64>,
    pub ssim: SsimConfig,
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        MsSsimConfig {
            max_scales: 5,
            weights: vec![0.0448, 0.2856, 0.3001, 0.2363, 0.1333],
            ssim: SsimConfig::default(),
        }
    }
}

impl MsSsimConfig {
    /// Number of scales usable for a `width x height` input: every scale must
    /// still fit one window after flooring halvings.
    pub fn effective_scales(&self, width: usize, height: usize) -> usize {
        let win = self.ssim.window_side;
        let (mut w, mut h) = (width, height);
        let mut m = 0;
        while m < self.max_scales.min(self.weights.len()) && w >= win && h >= win {
            m += 1;
            w /= 2;
            h /= 2;
        }
        m
    }

    fn validate(&self) -> Result<()> {
        self.ssim.validate()?;
        if self.max_scales == 0 || self.weights.len() < self.max_scales {
            return Err(Error::invalid("MS-SSIM needs one weight per scale"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("MS-SSIM weights must be positive"));
        }
        Ok(())
    }
}

/// Float copy of an image used across scales.
#[derive(Clone, Debug)]
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_image(img: &Image) -> Self {
        Plane {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&p| p as f64).collect(),
        }
    }

    fn downsample(&self) -> Plane {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let at = |dx, dy| self.data[(2 * y + dy) * self.width + 2 * x + dx];
                data.push(0.25 * (at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1)));
            }
        }
        Plane { width: w, height: h, data }
    }
}

/// Separable filtering over positions where the whole window fits.
fn filter_valid(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (width + 1 - k, height + 1 - k);
    let mut tmp = vec![0.0; ow * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn plane_components(x: &Plane, y: &Plane, cfg: &SsimConfig, taps: &[f64]) -> SsimComponents {
    let (w, h) = (x.width, x.height);
    let filt = |f: &dyn Fn(usize) -> f64| {
        let buf: Vec<f64> = (0..w * h).map(f).collect();
        filter_valid(&buf, w, h, taps)
    };
    let mu_x = filter_valid(&x.data, w, h, taps);
    let mu_y = filter_valid(&y.data, w, h, taps);
    let xx = filt(&|i| x.data[i] * x.data[i]);
    let yy = filt(&|i| y.data[i] * y.data[i]);
    let xy = filt(&|i| x.data[i] * y.data[i]);

    let (c1, c2, c3) = (cfg.c1(), cfg.c2(), cfg.c3());
    let (mut l_sum, mut c_sum, mut s_sum) = (0.0, 0.0, 0.0);
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = (xx[i] - mx * mx).max(0.0);
        let var_y = (yy[i] - my * my).max(0.0);
        let cov = xy[i] - mx * my;
        let (sx, sy) = (var_x.sqrt(), var_y.sqrt());
        l_sum += (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        c_sum += (2.0 * sx * sy + c2) / (var_x + var_y + c2);
        s_sum += (cov + c3) / (sx * sy + c3);
    }
    let n = mu_x.len() as f64;
    SsimComponents { luminance: l_sum / n, contrast: c_sum / n, structure: s_sum / n }
}

fn check_pair(x: &Image, y: &Image, window_side: usize) -> Result<()> {
    if !x.same_dims(y) {
        return Err(Error::dims(format!(
            "images are {}x{} and {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )));
    }
    if x.width() < window_side || x.height() < window_side {
        return Err(Error::invalid(format!(
            "image {}x{} is smaller than the {window_side}x{window_side} window",
            x.width(),
            x.height()
        )));
    }
    Ok(())
}

pub fn ssim_components(x: &Image, y: &Image, cfg: &SsimConfig) -> Result<SsimComponents> {
    cfg.validate()?;
    check_pair(x, y, cfg.window_side)?;
    Ok(plane_components(&Plane::from_image(x), &Plane::from_image(y), cfg, &cfg.window()))
}

/// Multi-scale SSIM in `[0, 1]`.
///
/// Uses as many scales as the image supports (at most `cfg.max_scales`) with
/// the corresponding weights renormalized to sum to one. Negative component
/// means are clamped to zero before exponentiation.
pub fn msssim(x: &Image, y: &Image, cfg: &MsSsimConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(x, y, cfg.ssim.window_side)?;
    let scales = cfg.effective_scales(x.width(), x.height());
    let weights = &cfg.weights[..scales];
    let norm: f64 = weights.iter().sum();
    let taps = cfg.ssim.window();

    let (mut px, mut py) = (Plane::from_image(x), Plane::from_image(y));
    let mut score = 1.0;
    for (j, &w) in weights.iter().enumerate() {
        let w = w / norm;
        let comp = plane_components(&px, &py, &cfg.ssim, &taps);
        score *= comp.contrast.max(0.0).powf(w) * comp.structure.max(0.0).powf(w);
        if j + 1 == scales {
            score *= comp.luminance.max(0.0).powf(w);
        } else {
            px = px.downsample();
            py = py.downsample();
        }
    }
    Ok(score.clamp(0.0, 1.0))
}

/// Index pairs drawn for averaging; never a self-pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSample {
    pub pairs: Vec<(usize, usize)>,
}

/// Draws `n_pairs` unordered pairs of distinct indices, uniformly and with
/// replacement across pairs.
pub fn sample_pairs(n_images: usize, n_pairs: usize, seed: u64) -> Result<PairSample> {
    if n_images < 2 {
        return Err(Error::invalid(format!("pair sampling needs at least 2 images, got {n_images}")));
    }
    let mut rng = Rng::new(seed);
    let pairs = (0..n_pairs)
        .map(|_| {
            let a = rng.below(n_images);
            let mut b = rng.below(n_images - 1);
            if b >= a {
                b += 1;
            }
            (a.min(b), a.max(b))
        })
        .collect();
    Ok(PairSample { pairs })
}

/// Mean MS-SSIM over the sampled pairs. Pairs are scored in parallel and summed
/// in list order.
pub fn mean_msssim(images: &[Image], pairs: &PairSample, cfg: &MsSsimConfig) -> Result<f64> {
    if pairs.pairs.is_empty() {
        return Err(Error::invalid("pair list is empty"));
    }
    if let Some(&(a, b)) = pairs.pairs.iter().find(|&&(a, b)| a.max(b) >= images.len() || a == b) {
        return Err(Error::invalid(format!("pair ({a}, {b}) is invalid for {} images", images.len())));
    }
    if images.windows(2).any(|w| !w[0].same_dims(&w[1])) {
        return Err(Error::dims("image set is not uniform in size"));
    }
    let scores = pairs
        .pairs
        .par_iter()
        .map(|&(a, b)| msssim(&images[a], &images[b], cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseVerdict {
    /// Synthetic-pair score minus real-pair score.
    pub delta: f64,
    /// True when synthetic images are more self-similar than real ones.
    pub collapsed: bool,
}

pub fn collapse_delta(real_score: f64, fake_score: f64) -> Result<CollapseVerdict> {
    for (name, v) in [("real", real_score), ("synthetic", fake_score)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} MS-SSIM score {v} outside [0, 1]")));
        }
    }
    let delta = fake_score - real_score;
    Ok(CollapseVerdict { delta, collapsed: delta > 0.0 })
}
