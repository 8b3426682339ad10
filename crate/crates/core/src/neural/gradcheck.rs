use super::loss::bce_loss;
use super::mlp::MlpModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Scalar objective used by [`grad_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckLoss {
    /// Binary cross-entropy; targets must be 0/1 and outputs probabilities.
    Bce,
    /// `sum(output * target) / batch`, linear in the output.
    Linear,
}

fn objective(model: &MlpModel, batch: &Matrix, targets: &Matrix, loss: CheckLoss) -> Result<(f64, Matrix)> {
    let (out, _) = model.forward(batch)?;
    if out.rows() != targets.rows() || out.cols() != targets.cols() {
        return Err(Error::dims("targets do not match model output shape"));
    }
    match loss {
        CheckLoss::Bce => {
            let (l, g) = bce_loss(out.values(), targets.values())?;
            Ok((l, Matrix::from_raw(out.rows(), out.cols(), g)))
        }
        CheckLoss::Linear => {
            let n = out.rows() as f64;
            let l = out.values().iter().zip(targets.values()).map(|(o, t)| o * t).sum::<f64>() / n;
            let g = targets.values().iter().map(|t| t / n).collect();
            Ok((l, Matrix::from_raw(out.rows(), out.cols(), g)))
        }
    }
}

/// Largest relative disagreement between backprop gradients and central
/// finite differences with step `epsilon`, over every parameter.
///
/// Relative error is `|a - f| / max(|a|, |f|, 1e-6)`; the floor keeps
/// vanishing gradients from amplifying round-off.
pub fn grad_check(model: &MlpModel, batch: &Matrix, targets: &Matrix, loss: CheckLoss, epsilon: f64) -> Result<f64> {
    let (_, out_grad) = objective(model, batch, targets, loss)?;
    let (_, cache) = model.forward(batch)?;
    let analytic = model.backward(&cache, &out_grad)?.grads;
    let analytic: Vec<f64> =
        analytic.layers.iter().flat_map(|(w, b)| w.values().iter().chain(b).copied().collect::<Vec<_>>()).collect();

    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut flat = 0;
    let buffers = probe.params().len();
    for buf in 0..buffers {
        let len = probe.params()[buf].len();
        for i in 0..len {
            let orig = probe.params()[buf][i];
            probe.params_mut()[buf][i] = orig + epsilon;
            let (hi, _) = objective(&probe, batch, targets, loss)?;
            probe.params_mut()[buf][i] = orig - epsilon;
            let (lo, _) = objective(&probe, batch, targets, loss)?;
            probe.params_mut()[buf][i] = orig;
            let fd = (hi - lo) / (2.0 * epsilon);
            let a = analytic[flat];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
            flat += 1;
        }
    }
    Ok(worst)
}
