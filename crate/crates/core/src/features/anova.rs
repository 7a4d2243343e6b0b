//! One-way ANOVA F statistic per feature column.

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// F score of a single column against class labels.
///
/// Zero within-class spread with differing class means is reported as
/// `+inf`; a column with no between-class spread scores 0.
pub fn f_score(values: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let mut counts = vec![0usize; n_classes];
    let mut sums = vec![0.0; n_classes];
    for (&v, &l) in values.iter().zip(labels) {
        counts[l] += 1;
        sums[l] += v;
    }
    let n = values.len() as f64;
    let k = counts.iter().filter(|&&c| c > 0).count() as f64;
    let grand = sums.iter().sum::<f64>() / n;
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let between: f64 = means
        .iter()
        .zip(&counts)
        .map(|(m, &c)| c as f64 * (m - grand) * (m - grand))
        .sum();
    let within: f64 = values
        .iter()
        .zip(labels)
        .map(|(v, &l)| (v - means[l]) * (v - means[l]))
        .sum();

    let scale = between + within;
    if scale == 0.0 || between <= f64::EPSILON * scale {
        return 0.0;
    }
    if within <= f64::EPSILON * scale {
        return f64::INFINITY;
    }
    (between / (k - 1.0)) / (within / (n - k))
}

/// F score for every column of `m`.
pub fn anova_f_scores(m: &FeatureMatrix, labels: &[usize]) -> Result<Vec<f64>> {
    if labels.len() != m.n_rows() {
        return Err(Error::Schema(format!(
            "{} labels for {} feature rows",
            labels.len(),
            m.n_rows()
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |&l| l + 1);
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InsufficientData(format!(
            "ANOVA needs at least 2 classes, found {present}"
        )));
    }
    if labels.len() <= present {
        return Err(Error::InsufficientData(format!(
            "ANOVA needs more rows ({}) than classes ({present})",
            labels.len()
        )));
    }
    Ok((0..m.n_cols())
        .map(|j| f_score(&m.column(j), labels, n_classes))
        .collect())
}
