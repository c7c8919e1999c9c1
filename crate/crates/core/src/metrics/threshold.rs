use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const DEFAULT_STEP: f64 = 0.01;

/// Grid `k / m` for `k = 0..=m`, where `m = 1 / step` must be whole.
pub fn grid(step: f64) -> Result<Vec<f64>, MetricsError> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(MetricsError::BadStep(step));
    }
    let m = (1.0 / step).round();
    if (m * step - 1.0).abs() > 1e-9 {
        return Err(MetricsError::BadStep(step));
    }
    let m = m as u32;
    Ok((0..=m).map(|k| f64::from(k) / f64::from(m)).collect())
}

fn check_unit(name: &'static str, value: f64) -> Result<f64, MetricsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(MetricsError::OutOfRange { name, value })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub overall_accuracy: f64,
    pub per_category_accuracy: BTreeMap<String, f64>,
}

/// Smallest grid threshold maximizing accuracy of `pred > t` against
/// `labels`. Per-category accuracy is reported at that single threshold;
/// a sample carrying several tags counts toward each.
pub fn threshold_search(
    preds: &[f64],
    labels: &[u8],
    categories: Option<&[Vec<String>]>,
    step: f64,
) -> Result<ThresholdResult, MetricsError> {
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), labels.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(i) = preds.iter().position(|p| !p.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(MetricsError::NotBinary(i));
    }
    if let Some(c) = categories {
        if c.len() != preds.len() {
            return Err(MetricsError::CategoryCount(c.len(), preds.len()));
        }
    }
    let correct_at = |t: f64, i: usize| u8::from(preds[i] > t) == labels[i];

    let mut best = (0usize, f64::NAN);
    for t in grid(step)? {
        let correct = (0..preds.len()).filter(|&i| correct_at(t, i)).count();
        if best.1.is_nan() || correct > best.0 {
            best = (correct, t);
        }
    }
    let (correct, threshold) = best;

    let mut per_category = BTreeMap::new();
    if let Some(categories) = categories {
        let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (i, tags) in categories.iter().enumerate() {
            for tag in tags {
                let slot = tally.entry(tag).or_default();
                slot.0 += usize::from(correct_at(threshold, i));
                slot.1 += 1;
            }
        }
        per_category = tally
            .into_iter()
            .map(|(tag, (c, n))| (tag.to_string(), c as f64 / n as f64))
            .collect();
    }
    Ok(ThresholdResult {
        threshold,
        overall_accuracy: correct as f64 / preds.len() as f64,
        per_category_accuracy: per_category,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Mean {
    #[default]
    Harmonic,
    Arithmetic,
}

impl F1Mean {
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            F1Mean::Harmonic if a + b == 0.0 => 0.0,
            F1Mean::Harmonic => 2.0 * a * b / (a + b),
            F1Mean::Arithmetic => (a + b) / 2.0,
        }
    }

    /// The mean of `pos / n_pos` and `neg / n_neg` as an exact fraction
    /// `(numerator, denominator)`.
    fn ratio(self, pos: u128, n_pos: u128, neg: u128, n_neg: u128) -> (u128, u128) {
        match self {
            F1Mean::Harmonic if pos + neg == 0 => (0, 1),
            F1Mean::Harmonic => (2 * pos * neg, pos * n_neg + neg * n_pos),
            F1Mean::Arithmetic => (pos * n_neg + neg * n_pos, 2 * n_pos * n_neg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Result {
    pub threshold: f64,
    pub f1: f64,
    /// Fraction of positives above the threshold.
    pub pos_acc: f64,
    /// Fraction of negatives at or below the threshold.
    pub neg_acc: f64,
}

/// Smallest grid threshold maximizing the mean of positive and negative
/// accuracy, where positives should score above and negatives at or below.
pub fn f1_threshold(
    pos_probs: &[f64],
    neg_probs: &[f64],
    step: f64,
    mean: F1Mean,
) -> Result<F1Result, MetricsError> {
    if pos_probs.is_empty() || neg_probs.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (i, p) in pos_probs.iter().chain(neg_probs).enumerate() {
        if !p.is_finite() {
            return Err(MetricsError::NonFinite(i));
        }
    }
    let (n_pos, n_neg) = (pos_probs.len(), neg_probs.len());
    let mut best: Option<((u128, u128), F1Result)> = None;
    for t in grid(step)? {
        let pos = pos_probs.iter().filter(|&&p| p > t).count();
        let neg = neg_probs.iter().filter(|&&p| p <= t).count();
        let key = mean.ratio(pos as u128, n_pos as u128, neg as u128, n_neg as u128);
        let better = best.is_none_or(|((num, den), _)| key.0 * den > num * key.1);
        if better {
            let pos_acc = pos as f64 / n_pos as f64;
            let neg_acc = neg as f64 / n_neg as f64;
            let result = F1Result {
                threshold: t,
                f1: mean.combine(pos_acc, neg_acc),
                pos_acc,
                neg_acc,
            };
            best = Some((key, result));
        }
    }
    Ok(best.expect("grid is non-empty").1)
}

/// Mean of positive and negative accuracy.
pub fn structural_accuracy(pos_acc: f64, neg_acc: f64) -> Result<f64, MetricsError> {
    Ok((check_unit("pos_acc", pos_acc)? + check_unit("neg_acc", neg_acc)?) / 2.0)
}

/// Fraction of flagged problems the model answered "yes" on.
pub fn recall_rate(answers: &[u8]) -> Result<f64, MetricsError> {
    if answers.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(i) = answers.iter().position(|&a| a > 1) {
        return Err(MetricsError::NotBinary(i));
    }
    let yes = answers.iter().filter(|&&a| a == 1).count();
    Ok(yes as f64 / answers.len() as f64)
}
