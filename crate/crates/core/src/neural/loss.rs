use crate::error::{Error, Result};

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy and its derivative with respect to each `p`.
///
/// The derivative is that of the clamped loss, so it is zero for predictions
/// outside the clamp range.
pub fn bce_loss(p: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if p.len() != y.len() {
        return Err(Error::dims(format!("{} predictions vs {} labels", p.len(), y.len())));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction"));
    }
    if p.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = p.len() as f64;
    let mut loss = 0.0;
    let grad = p
        .iter()
        .zip(y)
        .map(|(&pv, &yv)| {
            let pc = pv.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            loss -= yv * pc.ln() + (1.0 - yv) * (1.0 - pc).ln();
            if pc != pv {
                return 0.0;
            }
            (pc - yv) / (pc * (1.0 - pc)) / n
        })
        .collect();
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn reference_values() {
        assert!((bce_loss(&[0.5], &[1.0]).unwrap().0 - 0.6931).abs() < 1e-4);
        assert!((bce_loss(&[0.9], &[0.0]).unwrap().0 - 2.3026).abs() < 1e-4);
        let (perfect, _) = bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((0.0..1e-6).contains(&perfect));
    }

    #[test]
    fn bad_labels_are_rejected() {
        assert!(bce_loss(&[0.5], &[0.5]).is_err());
        assert!(bce_loss(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let (p, y) = ([0.2, 0.7, 0.45], [1.0, 0.0, 1.0]);
        let (_, g) = bce_loss(&p, &y).unwrap();
        for i in 0..3 {
            let (mut hi, mut lo) = (p, p);
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            let fd = (bce_loss(&hi, &y).unwrap().0 - bce_loss(&lo, &y).unwrap().0) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn loss_is_non_negative(
            pairs in prop::collection::vec((0.0f64..=1.0, prop::bool::ANY), 1..20)
        ) {
            let p: Vec<f64> = pairs.iter().map(|t| t.0).collect();
            let y: Vec<f64> = pairs.iter().map(|t| f64::from(u8::from(t.1))).collect();
            let (loss, _) = bce_loss(&p, &y).unwrap();
            prop_assert!(loss >= 0.0);
            let (exact, _) = bce_loss(&y, &y).unwrap();
            prop_assert!(exact < 1e-6);
        }
    }
}
