//! Evaluation metrics for binary anomaly detection.
//!
//! The positive class is label 1, the anomalous flow. Counts are exact
//! integers; derived rates divide once at the end so results carry a single
//! rounding step.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} labels vs {right} values")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("label at index {index} is {value}, expected 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("score at index {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("ROC-AUC needs both classes present")]
    SingleClass,
}

/// Binary confusion counts. Positive class is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Ratio metrics derived from a confusion matrix.
///
/// Any metric whose denominator is zero is reported as 0.0 and the
/// `degenerate` flag is raised so callers can tell a true zero from an
/// undefined one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// Tallies confusion counts from true and predicted labels.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (index, &value) in y_true.iter().chain(y_pred.iter()).enumerate() {
        if value > 1 {
            return Err(MetricsError::InvalidLabel {
                index: index % y_true.len(),
                value,
            });
        }
    }
    let mut cm = ConfusionMatrix { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => unreachable!("labels validated above"),
        }
    }
    Ok(cm)
}

/// Computes accuracy, precision, recall and F1 from confusion counts.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics { accuracy, precision, recall, f1, degenerate })
}

/// ROC-AUC by the rank statistic: the probability that a random positive
/// scores above a random negative, counting ties as one half.
///
/// Ranks are held as doubled integers so the final value is a single
/// rounding of the exact rational.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (index, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(MetricsError::NonFiniteScore { index });
        }
    }
    for (index, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(MetricsError::InvalidLabel { index, value: l });
        }
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Sum of doubled average ranks over the positives, tie groups averaged.
    let mut rank2_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Doubled average of 1-based ranks i+1 ..= j+1.
        let rank2 = (i + 1 + j + 1) as u64;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank2_pos += rank2;
            }
        }
        i = j + 1;
    }
    let u2 = rank2_pos - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}
