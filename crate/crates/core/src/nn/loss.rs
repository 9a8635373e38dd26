//! Binary cross-entropy.

use super::NnError;

/// Probabilities are clamped into [PROB_CLAMP, 1 - PROB_CLAMP] before any
/// logarithm so the loss never becomes infinite.
pub const PROB_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over a batch.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64, NnError> {
    if probs.len() != labels.len() {
        return Err(NnError::LengthMismatch { left: probs.len(), right: labels.len() });
    }
    if probs.is_empty() {
        return Err(NnError::Empty);
    }
    let mut sum = 0.0;
    for (index, (&p, &y)) in probs.iter().zip(labels).enumerate() {
        if !p.is_finite() {
            return Err(NnError::NonFiniteProb { index });
        }
        if y > 1 {
            return Err(NnError::InvalidLabel { index, value: y });
        }
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        sum -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(sum / probs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let ln2 = bce_loss(&[0.5], &[1]).unwrap();
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-12, "-ln(0.5) came out {ln2}");
        let ln4 = bce_loss(&[0.25], &[1]).unwrap();
        assert!((ln4 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12, "-ln(0.25) came out {ln4}");
    }

    #[test]
    fn confident_correct_prediction_is_near_zero() {
        let loss = bce_loss(&[1.0], &[1]).unwrap();
        assert!(loss > 0.0 && loss < 1e-6, "clamped loss {loss}");
        let loss = bce_loss(&[0.0], &[0]).unwrap();
        assert!(loss > 0.0 && loss < 1e-6, "clamped loss {loss}");
    }

    #[test]
    fn confident_wrong_prediction_is_large_but_finite() {
        let loss = bce_loss(&[0.0], &[1]).unwrap();
        assert!(loss.is_finite());
        assert!((loss - (-PROB_CLAMP.ln())).abs() < 1e-9);
    }

    #[test]
    fn mean_over_batch() {
        let a = bce_loss(&[0.5, 0.25], &[1, 1]).unwrap();
        let expected = 1.5 * std::f64::consts::LN_2;
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(bce_loss(&[0.5], &[1, 0]), Err(NnError::LengthMismatch { .. })));
        assert!(matches!(bce_loss(&[], &[]), Err(NnError::Empty)));
        assert!(matches!(bce_loss(&[f64::NAN], &[1]), Err(NnError::NonFiniteProb { index: 0 })));
        assert!(matches!(bce_loss(&[0.5], &[2]), Err(NnError::InvalidLabel { index: 0, value: 2 })));
    }
}
