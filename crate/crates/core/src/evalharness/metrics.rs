use crate::error::{Error, Result};

/// Confusion counts with the majority class (label 1) as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn from_predictions(predicted: &[u8], labels: &[u8]) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(Error::dims(format!("{} predictions vs {} labels", predicted.len(), labels.len())));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &y) in predicted.iter().zip(labels) {
            match (p, y) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 0) => c.tn += 1,
                (0, 1) => c.fn_ += 1,
                _ => return Err(Error::invalid(format!("labels must be 0 or 1, got ({p}, {y})"))),
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UtilityMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn confusion_metrics(c: &ConfusionCounts) -> UtilityMetrics {
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(c.tp + c.tn, c.total());
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    UtilityMetrics { accuracy, precision, recall, specificity, degenerate }
}
