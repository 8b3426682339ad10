use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// GAN setting: lr 2e-4, β1 0.5.
    pub const GAN: AdamConfig = AdamConfig { lr: 2e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8 };
    /// Classifier setting: lr 1e-3, β1 0.9.
    pub const CLASSIFIER: AdamConfig = AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig::GAN
    }
}

/// Moment buffers mirroring a list of parameter buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(shapes: &[usize], config: AdamConfig) -> Self {
        AdamState {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn for_model(model: &MlpModel, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        AdamState::new(&shapes, config)
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update of `params` in place. Nothing is modified
    /// when shapes disagree or any gradient is non-finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        let shapes_ok = params.len() == self.m.len()
            && grads.len() == self.m.len()
            && self.m.iter().zip(params.iter()).zip(grads).all(|((m, p), g)| m.len() == p.len() && m.len() == g.len());
        if !shapes_ok {
            return Err(Error::dims("parameter, gradient and moment buffers differ in shape"));
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("gradient"));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step_model(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let g: Vec<&[f64]> = grads.layers.iter().flat_map(|(w, b)| [w.values(), b.as_slice()]).collect();
        self.step(&mut model.params_mut(), &g)
    }
}
