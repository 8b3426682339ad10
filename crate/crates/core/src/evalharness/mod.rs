//! Downstream-utility evaluation: class balancing with synthetic images,
//! geometric augmentation, a small classifier and confusion-matrix metrics.

mod classifier;
mod geometric;
mod metrics;

pub use classifier::{evaluate, predict_labels, train_classifier, ClassifierConfig, LabeledDataset};
pub use geometric::{affine_transform, geometric_augment, GeometricRanges};
pub use metrics::{confusion_metrics, ConfusionCounts, UtilityMetrics};

use crate::error::{Error, Result};
use crate::imgproc::Image;

/// The minority set followed by the first `target - minority.len()`
/// synthetic images.
pub fn augment(minority: &[Image], synthetic: &[Image], target: usize) -> Result<Vec<Image>> {
    if target < minority.len() {
        return Err(Error::invalid(format!(
            "target {target} is smaller than the minority set ({})",
            minority.len()
        )));
    }
    let needed = target - minority.len();
    if synthetic.len() < needed {
        return Err(Error::invalid(format!(
            "need {needed} synthetic images but only {} are available",
            synthetic.len()
        )));
    }
    Ok(minority.iter().chain(&synthetic[..needed]).cloned().collect())
}
