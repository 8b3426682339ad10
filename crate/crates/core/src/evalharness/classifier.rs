use super::metrics::{confusion_metrics, ConfusionCounts, UtilityMetrics};
use crate::error::{Error, Result};
use crate::imgproc::Image;
use crate::linalg::Matrix;
use crate::neural::{bce_loss, Activation, AdamConfig, AdamState, MlpModel, INIT_STD};
use crate::rng::Rng;

/// Images with binary labels: 0 = minority (negative), 1 = majority (positive).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::dims(format!("{} images vs {} labels", images.len(), labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
        }
        if images.windows(2).any(|w| !w[0].same_dims(&w[1])) {
            return Err(Error::dims("dataset images differ in size"));
        }
        Ok(LabeledDataset { images, labels })
    }

    /// Negatives first, then positives.
    pub fn from_classes(negatives: Vec<Image>, positives: Vec<Image>) -> Result<Self> {
        let labels = std::iter::repeat_n(0, negatives.len()).chain(std::iter::repeat_n(1, positives.len())).collect();
        LabeledDataset::new(negatives.into_iter().chain(positives).collect(), labels)
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    fn pixels(&self) -> usize {
        self.images.first().map_or(0, |i| i.data().len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: 64, epochs: 50, batch_size: 32, seed: 0, adam: AdamConfig::CLASSIFIER }
    }
}

fn to_matrix(images: &[&Image]) -> Matrix {
    let cols = images.first().map_or(0, |i| i.data().len());
    let values = images.iter().flat_map(|i| i.data().iter().map(|&p| p as f64 / 255.0)).collect();
    Matrix::from_raw(images.len(), cols, values)
}

/// Flattened-pixel MLP `pixels -> hidden (relu) -> 1 (sigmoid)` trained with
/// BCE and Adam on shuffled mini-batches.
pub fn train_classifier(data: &LabeledDataset, cfg: &ClassifierConfig) -> Result<MlpModel> {
    if !data.labels.contains(&0) || !data.labels.contains(&1) {
        return Err(Error::invalid("classifier training needs both classes"));
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 {
        return Err(Error::invalid("hidden width and batch size must be positive"));
    }
    let mut rng = Rng::new(cfg.seed);
    let mut model = MlpModel::init(
        &[data.pixels(), cfg.hidden, 1],
        &[Activation::Relu, Activation::Sigmoid],
        INIT_STD,
        &mut rng,
    )?;
    let mut opt = AdamState::for_model(&model, cfg.adam);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let x = to_matrix(&chunk.iter().map(|&i| &data.images[i]).collect::<Vec<_>>());
            let y: Vec<f64> = chunk.iter().map(|&i| data.labels[i] as f64).collect();
            let (p, cache) = model.forward(&x)?;
            let (loss, grad) = bce_loss(p.values(), &y)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, what: "classifier loss" });
            }
            let bp = model.backward(&cache, &Matrix::from_raw(chunk.len(), 1, grad))?;
            opt.step_model(&mut model, &bp.grads).map_err(|e| match e {
                Error::NonFinite(_) => Error::Divergence { epoch, what: "classifier gradient" },
                other => other,
            })?;
        }
    }
    Ok(model)
}

/// Hard labels at the 0.5 probability threshold.
pub fn predict_labels(model: &MlpModel, images: &[Image]) -> Result<Vec<u8>> {
    if images.is_empty() {
        return Ok(Vec::new());
    }
    let p = model.predict(&to_matrix(&images.iter().collect::<Vec<_>>()))?;
    Ok(p.values().iter().map(|&v| u8::from(v >= 0.5)).collect())
}

pub fn evaluate(model: &MlpModel, data: &LabeledDataset) -> Result<(ConfusionCounts, UtilityMetrics)> {
    let predicted = predict_labels(model, &data.images)?;
    let counts = ConfusionCounts::from_predictions(&predicted, &data.labels)?;
    Ok((counts, confusion_metrics(&counts)))
}
