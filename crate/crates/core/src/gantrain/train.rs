use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imgproc::{to_u8, Image};
use crate::linalg::Matrix;
use crate::neural::{bce_loss, Activation, AdamConfig, AdamState, MlpModel, INIT_STD};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub image_side: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            latent_dim: 100,
            image_side: 16,
            gen_hidden: vec![256, 512],
            disc_hidden: vec![256, 128],
            batch_size: 20,
            epochs: 200,
            seed: 0,
            adam: AdamConfig::GAN,
        }
    }
}

impl GanConfig {
    pub fn pixels(&self) -> usize {
        self.image_side * self.image_side
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.image_side == 0 || self.batch_size == 0 {
            return Err(Error::invalid("latent_dim, image_side and batch_size must be positive"));
        }
        if self.gen_hidden.contains(&0) || self.disc_hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// Generator `latent -> hidden (relu) -> pixels (tanh)`.
    pub fn init_generator(&self, rng: &mut Rng) -> Result<MlpModel> {
        let dims: Vec<usize> =
            std::iter::once(self.latent_dim).chain(self.gen_hidden.iter().copied()).chain([self.pixels()]).collect();
        let mut acts = vec![Activation::Relu; self.gen_hidden.len()];
        acts.push(Activation::Tanh);
        MlpModel::init(&dims, &acts, INIT_STD, rng)
    }

    /// Discriminator `pixels -> hidden (leaky relu) -> 1 (sigmoid)`.
    pub fn init_discriminator(&self, rng: &mut Rng) -> Result<MlpModel> {
        let dims: Vec<usize> =
            std::iter::once(self.pixels()).chain(self.disc_hidden.iter().copied()).chain([1]).collect();
        let mut acts = vec![Activation::LeakyRelu; self.disc_hidden.len()];
        acts.push(Activation::Sigmoid);
        MlpModel::init(&dims, &acts, INIT_STD, rng)
    }
}

/// Per-epoch mean losses. `d_loss` averages the real and fake batch losses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub d_loss: Vec<f64>,
    pub g_loss: Vec<f64>,
    /// Discriminator optimizer updates applied.
    pub d_steps: u64,
    /// Generator optimizer updates applied.
    pub g_steps: u64,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.d_loss.len()
    }

    /// `epoch,d_loss,g_loss` with 1-based epochs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss\n");
        for (i, (d, g)) in self.d_loss.iter().zip(&self.g_loss).enumerate() {
            writeln!(out, "{},{d},{g}", i + 1).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct TrainedGan {
    pub generator: MlpModel,
    pub discriminator: MlpModel,
    pub history: TrainHistory,
}

/// Pixels mapped from `[0, 255]` to `[-1, 1]`, one image per row.
pub fn images_to_matrix(images: &[&Image]) -> Matrix {
    let cols = images.first().map_or(0, |i| i.data().len());
    let values = images.iter().flat_map(|i| i.data().iter().map(|&p| p as f64 / 127.5 - 1.0)).collect();
    Matrix::from_raw(images.len(), cols, values)
}

fn latent_batch(rng: &mut Rng, rows: usize, dim: usize) -> Matrix {
    Matrix::from_raw(rows, dim, (0..rows * dim).map(|_| rng.normal()).collect())
}

/// One discriminator update toward `label` on `batch`.
fn disc_step(d: &mut MlpModel, opt: &mut AdamState, batch: &Matrix, label: f64, epoch: usize) -> Result<f64> {
    let (p, cache) = d.forward(batch)?;
    let y = vec![label; p.rows()];
    let (loss, grad) = bce_loss(p.values(), &y)?;
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch, what: "discriminator loss" });
    }
    let bp = d.backward(&cache, &Matrix::from_raw(p.rows(), 1, grad))?;
    opt.step_model(d, &bp.grads).map_err(|e| diverged(e, epoch, "discriminator gradient"))?;
    Ok(loss)
}

fn diverged(e: Error, epoch: usize, what: &'static str) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence { epoch, what },
        other => other,
    }
}

/// Adversarial training with separate real and fake discriminator batches and
/// one generator update per batch. Single-threaded and deterministic per seed.
pub fn train_gan(cfg: &GanConfig, images: &[Image]) -> Result<TrainedGan> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if let Some(bad) = images.iter().find(|i| i.width() != cfg.image_side || i.height() != cfg.image_side) {
        return Err(Error::dims(format!(
            "training image is {}x{}, expected {s}x{s}",
            bad.width(),
            bad.height(),
            s = cfg.image_side
        )));
    }
    if cfg.batch_size > images.len() {
        return Err(Error::invalid(format!(
            "batch size {} exceeds dataset size {}",
            cfg.batch_size,
            images.len()
        )));
    }

    let mut rng = Rng::new(cfg.seed);
    let mut g = cfg.init_generator(&mut rng)?;
    let mut d = cfg.init_discriminator(&mut rng)?;
    let mut opt_g = AdamState::for_model(&g, cfg.adam);
    let mut opt_d = AdamState::for_model(&d, cfg.adam);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..images.len()).collect();

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let (mut d_sum, mut g_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let m = chunk.len();
            let real = images_to_matrix(&chunk.iter().map(|&i| &images[i]).collect::<Vec<_>>());
            let real_loss = disc_step(&mut d, &mut opt_d, &real, 1.0, epoch)?;

            let fake = g.predict(&latent_batch(&mut rng, m, cfg.latent_dim))?;
            let fake_loss = disc_step(&mut d, &mut opt_d, &fake, 0.0, epoch)?;

            let (fake, g_cache) = g.forward(&latent_batch(&mut rng, m, cfg.latent_dim))?;
            let (p, d_cache) = d.forward(&fake)?;
            let (g_loss, grad) = bce_loss(p.values(), &vec![1.0; m])?;
            if !g_loss.is_finite() {
                return Err(Error::Divergence { epoch, what: "generator loss" });
            }
            let through_d = d.backward(&d_cache, &Matrix::from_raw(m, 1, grad))?;
            let bp = g.backward(&g_cache, &through_d.input_grad)?;
            opt_g.step_model(&mut g, &bp.grads).map_err(|e| diverged(e, epoch, "generator gradient"))?;

            d_sum += 0.5 * (real_loss + fake_loss);
            g_sum += g_loss;
            batches += 1;
        }
        history.d_loss.push(d_sum / batches as f64);
        history.g_loss.push(g_sum / batches as f64);
    }
    history.d_steps = opt_d.steps();
    history.g_steps = opt_g.steps();
    Ok(TrainedGan { generator: g, discriminator: d, history })
}

/// Samples `n` images from `generator` with `z ~ N(0, I)`, mapping the tanh
/// output from `[-1, 1]` to `[0, 255]` with round-half-up.
pub fn generate(generator: &MlpModel, n: usize, seed: u64) -> Result<Vec<Image>> {
    let pixels = generator.output_dim();
    let side = (pixels as f64).sqrt().round() as usize;
    if side * side != pixels {
        return Err(Error::dims(format!("generator output dimension {pixels} is not a perfect square")));
    }
    let latent = generator.input_dim();
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 0 {
        let rows = remaining.min(256);
        let batch = generator.predict(&latent_batch(&mut rng, rows, latent))?;
        for r in 0..rows {
            let data = batch.row(r).iter().map(|&v| to_u8((v + 1.0) * 127.5)).collect();
            out.push(Image::new(side, side, data)?);
        }
        remaining -= rows;
    }
    Ok(out)
}
