//! Petrosian and Katz fractal dimensions.

use super::stats::sign_changes;

/// Result returned by [`katz_fd`] when its denominator vanishes; also the upper clamp.
pub const KATZ_CAP: f64 = 10.0;

/// Petrosian fractal dimension from sign changes of the first difference.
pub fn petrosian_fd(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return 1.0;
    }
    let deltas: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let n_delta = sign_changes(&deltas) as f64;
    let nf = n as f64;
    let log_n = nf.log10();
    log_n / (log_n + (nf / (nf + 0.4 * n_delta)).log10())
}

/// Katz fractal dimension. Curve length and maximum excursion are measured
/// from the first sample; straight and constant signals return 1.0.
pub fn katz_fd(s: &[f64]) -> f64 {
    if s.len() < 3 {
        return 1.0;
    }
    let length: f64 = s.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let extent = s.iter().map(|v| (v - s[0]).abs()).fold(0.0, f64::max);
    if length == 0.0 || extent == 0.0 {
        return 1.0;
    }
    let log_n = ((s.len() - 1) as f64).log10();
    let denom = log_n + (extent / length).log10();
    if denom <= 1e-12 {
        return KATZ_CAP;
    }
    (log_n / denom).min(KATZ_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct transcription of the Petrosian formula with an explicit loop
    /// over sign flips, kept separate from the shared helper.
    fn petrosian_reference(s: &[f64]) -> f64 {
        let mut flips = 0;
        let mut last = 0i8;
        for i in 1..s.len() {
            let d = s[i] - s[i - 1];
            let sign = if d > 0.0 { 1 } else if d < 0.0 { -1 } else { last };
            if last != 0 && sign != last {
                flips += 1;
            }
            last = sign;
        }
        let n = s.len() as f64;
        n.log10() / (n.log10() + (n / (n + 0.4 * flips as f64)).log10())
    }

    #[test]
    fn petrosian_values() {
        assert_eq!(petrosian_fd(&[0.0, 1.0, 2.0, 3.0, 4.0]), 1.0);
        assert_eq!(petrosian_fd(&[2.0; 8]), 1.0);
        let zigzag = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let expected = petrosian_reference(&zigzag);
        assert!((expected - 1.144_39).abs() < 1e-5, "{expected}");
        assert!((petrosian_fd(&zigzag) - expected).abs() < 1e-15);
    }

    #[test]
    fn katz_values() {
        assert_eq!(katz_fd(&[0.0, 1.0, 2.0, 3.0]), 1.0);
        assert_eq!(katz_fd(&[4.0; 6]), 1.0);
        let expected = 2f64.log10() / (2f64.log10() + (2.0f64 / 3.0).log10());
        assert!((katz_fd(&[0.0, 2.0, 1.0]) - expected).abs() < 1e-12);
        assert!((expected - 2.41).abs() < 1e-2);
    }

    #[test]
    fn katz_cap_when_denominator_vanishes() {
        // n = 4, extent 10, length 40: log10(4) + log10(1/4) = 0.
        assert_eq!(katz_fd(&[0.0, 10.0, 0.0, 10.0, 0.0]), KATZ_CAP);
    }
}
