//! Statistical and temporal descriptors of a single channel.

/// Number of values returned by [`extract_statistical`].
pub const STATISTICAL_COUNT: usize = 27;

pub const STATISTICAL_NAMES: [&str; STATISTICAL_COUNT] = [
    "mean",
    "median",
    "mode",
    "max",
    "min",
    "std",
    "variance",
    "iqr",
    "rms",
    "average_power",
    "abs_energy",
    "peak_to_peak",
    "mean_crossing_rate",
    "auc",
    "entropy",
    "autocorrelation",
    "temporal_centroid",
    "mean_abs_diff",
    "mean_diff",
    "median_abs_diff",
    "median_diff",
    "sum_abs_diff",
    "signal_distance",
    "slope",
    "zero_crossing_rate",
    "positive_turning_points",
    "negative_turning_points",
];

const HIST_BINS: usize = 10;

pub fn mean(s: &[f64]) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    s.iter().sum::<f64>() / s.len() as f64
}

/// Population variance.
pub fn variance(s: &[f64]) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let m = mean(s);
    s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / s.len() as f64
}

pub fn std_dev(s: &[f64]) -> f64 {
    variance(s).sqrt()
}

pub fn sorted(s: &[f64]) -> Vec<f64> {
    let mut v = s.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            if frac == 0.0 {
                sorted[lo]
            } else {
                sorted[lo] + (sorted[hi] - sorted[lo]) * frac
            }
        }
    }
}

pub fn median(s: &[f64]) -> f64 {
    quantile_sorted(&sorted(s), 0.5)
}

pub fn diff(s: &[f64]) -> Vec<f64> {
    s.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Count strict sign changes; zeros inherit the previous nonzero sign and
/// leading zeros are ignored.
pub fn sign_changes(s: &[f64]) -> usize {
    let mut prev = 0.0f64;
    let mut changes = 0;
    for &v in s {
        if v == 0.0 {
            continue;
        }
        let sign = v.signum();
        if prev != 0.0 && sign != prev {
            changes += 1;
        }
        prev = sign;
    }
    changes
}

/// Counts over 10 equal-width bins spanning `[min, max]`, or `None` when the
/// range is zero.
fn equal_width_histogram(s: &[f64], min: f64, max: f64) -> Option<[usize; HIST_BINS]> {
    let range = max - min;
    if range <= 0.0 || !range.is_finite() {
        return None;
    }
    let mut counts = [0usize; HIST_BINS];
    for &v in s {
        let b = (((v - min) / range) * HIST_BINS as f64).floor() as usize;
        counts[b.min(HIST_BINS - 1)] += 1;
    }
    Some(counts)
}

fn crossing_rate(s: &[f64], level: f64) -> f64 {
    if s.len() < 2 {
        return 0.0;
    }
    let shifted: Vec<f64> = s.iter().map(|v| v - level).collect();
    sign_changes(&shifted) as f64 / (s.len() - 1) as f64
}

/// The 27 statistical/temporal features in catalog order. `rate` sets the
/// sample spacing used by AUC and the temporal centroid.
pub fn extract_statistical(s: &[f64], rate: f64) -> [f64; STATISTICAL_COUNT] {
    let n = s.len();
    let nf = n as f64;
    let dt = 1.0 / rate;
    let ordered = sorted(s);
    let min = ordered.first().copied().unwrap_or(0.0);
    let max = ordered.last().copied().unwrap_or(0.0);
    let mean_v = mean(s);
    let var = variance(s);
    let sum_sq: f64 = s.iter().map(|v| v * v).sum();
    let hist = equal_width_histogram(s, min, max);

    let mode = match hist {
        None => min,
        Some(counts) => {
            let mut best = 0;
            for (i, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = i;
                }
            }
            let width = (max - min) / HIST_BINS as f64;
            min + (best as f64 + 0.5) * width
        }
    };

    let entropy = match hist {
        None => 0.0,
        Some(counts) => counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.log2()
            })
            .sum(),
    };

    let auc = s.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();

    let autocorrelation = if var > 0.0 {
        let num: f64 = s.windows(2).map(|w| (w[0] - mean_v) * (w[1] - mean_v)).sum();
        num / (var * nf)
    } else {
        0.0
    };

    let centroid = if sum_sq > 0.0 {
        s.iter().enumerate().map(|(i, v)| i as f64 * dt * v * v).sum::<f64>() / sum_sq
    } else {
        (nf - 1.0) * dt / 2.0
    };

    let d = diff(s);
    let abs_d: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let sum_abs_diff: f64 = abs_d.iter().sum();
    let signal_distance = d.iter().map(|v| (1.0 + v * v).sqrt()).sum();

    let slope = {
        let mean_i = (nf - 1.0) / 2.0;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in s.iter().enumerate() {
            let di = i as f64 - mean_i;
            num += di * (v - mean_v);
            den += di * di;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };

    let positive_turning = d.windows(2).filter(|w| w[0] > 0.0 && w[1] < 0.0).count() as f64;
    let negative_turning = d.windows(2).filter(|w| w[0] < 0.0 && w[1] > 0.0).count() as f64;

    [
        mean_v,
        quantile_sorted(&ordered, 0.5),
        mode,
        max,
        min,
        var.sqrt(),
        var,
        quantile_sorted(&ordered, 0.75) - quantile_sorted(&ordered, 0.25),
        (sum_sq / nf).sqrt(),
        sum_sq / nf,
        sum_sq,
        max - min,
        crossing_rate(s, mean_v),
        auc,
        entropy,
        autocorrelation,
        centroid,
        mean(&abs_d),
        mean(&d),
        median(&abs_d),
        median(&d),
        sum_abs_diff,
        signal_distance,
        slope,
        crossing_rate(s, 0.0),
        positive_turning,
        negative_turning,
    ]
}
