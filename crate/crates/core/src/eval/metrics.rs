//! Macro F1 and confusion matrices.

use crate::error::{Error, Result};

fn check(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::Schema(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if let Some(&bad) = truth.iter().chain(pred).find(|&&l| l >= n_classes) {
        return Err(Error::Schema(format!("label {bad} outside label set of {n_classes}")));
    }
    Ok(())
}

/// Counts with rows = truth, columns = prediction.
pub fn confusion_matrix(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    check(truth, pred, n_classes)?;
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

/// Per-class F1 from a confusion matrix; `None` for classes absent from both
/// truth and predictions.
pub fn per_class_f1(confusion: &[Vec<u64>]) -> Vec<Option<f64>> {
    let k = confusion.len();
    (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let row: u64 = confusion[c].iter().sum();
            let col: u64 = confusion.iter().map(|r| r[c]).sum();
            if row == 0 && col == 0 {
                return None;
            }
            let (fn_, fp) = (row - tp, col - tp);
            let denom = 2 * tp + fp + fn_;
            Some(if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 })
        })
        .collect()
}

/// Unweighted mean F1 over classes occurring in truth or predictions.
pub fn macro_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<f64> {
    let cm = confusion_matrix(truth, pred, n_classes)?;
    let scores: Vec<f64> = per_class_f1(&cm).into_iter().flatten().collect();
    if scores.is_empty() {
        return Ok(0.0);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
