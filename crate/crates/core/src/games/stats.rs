//! Estimators for advantages, rates, and empirical trace distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    /// `|P̂(1 | b=1) - P̂(1 | b=0)|`.
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p0: f64,
    pub p1: f64,
    pub n0: usize,
    pub n1: usize,
}

/// Advantage from per-bit output samples, with a 95% interval on `|p1 - p0|`
/// built from Newcombe's hybrid of two Wilson intervals.
pub fn estimate_advantage(outputs_b0: &[bool], outputs_b1: &[bool]) -> AdvantageEstimate {
    let (n0, n1) = (outputs_b0.len(), outputs_b1.len());
    let k0 = outputs_b0.iter().filter(|&&o| o).count();
    let k1 = outputs_b1.iter().filter(|&&o| o).count();
    let p0 = if n0 == 0 { 0.0 } else { k0 as f64 / n0 as f64 };
    let p1 = if n1 == 0 { 0.0 } else { k1 as f64 / n1 as f64 };
    let (l0, u0) = wilson_interval(k0, n0, Z95);
    let (l1, u1) = wilson_interval(k1, n1, Z95);
    let d = p1 - p0;
    let lo = d - ((p1 - l1).powi(2) + (u0 - p0).powi(2)).sqrt();
    let hi = d + ((u1 - p1).powi(2) + (p0 - l0).powi(2)).sqrt();
    let (ci_low, ci_high) = if lo >= 0.0 {
        (lo, hi)
    } else if hi <= 0.0 {
        (-hi, -lo)
    } else {
        (0.0, hi.max(-lo))
    };
    AdvantageEstimate { advantage: d.abs(), ci_low, ci_high, p0, p1, n0, n1 }
}

/// Half the L1 distance between two empirical distributions over the same keys.
pub fn empirical_trace_distance<K: Ord + Clone>(samples0: &[K], samples1: &[K]) -> f64 {
    let mut cells: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    let (w0, w1) = (1.0 / samples0.len().max(1) as f64, 1.0 / samples1.len().max(1) as f64);
    for k in samples0 {
        cells.entry(k.clone()).or_default().0 += w0;
    }
    for k in samples1 {
        cells.entry(k.clone()).or_default().1 += w1;
    }
    0.5 * cells.values().map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Observed acceptance count against a Poisson-binomial expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub observed: usize,
    pub expected: f64,
    pub sigma: f64,
    pub z_score: f64,
}

impl RateCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.observed as f64 - self.expected).abs() <= sigmas * self.sigma + 1e-9
    }
}

/// Compares `accepted` with independent per-trial acceptance probabilities `probs`.
pub fn rate_check(accepted: &[bool], probs: &[f64]) -> RateCheck {
    assert_eq!(accepted.len(), probs.len(), "one probability per trial");
    let observed = accepted.iter().filter(|&&a| a).count();
    let expected: f64 = probs.iter().sum();
    let sigma = probs.iter().map(|p| p * (1.0 - p)).sum::<f64>().sqrt();
    let z_score = if sigma > 0.0 { (observed as f64 - expected) / sigma } else { 0.0 };
    RateCheck { observed, expected, sigma, z_score }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(ones: usize, n: usize) -> Vec<bool> {
        (0..n).map(|i| i < ones).collect()
    }

    #[test]
    fn identical_samples_have_zero_advantage() {
        let e = estimate_advantage(&samples(30, 100), &samples(30, 100));
        assert_eq!(e.advantage, 0.0);
        assert_eq!(e.ci_low, 0.0);
        assert!(e.ci_high > 0.0 && e.ci_high < 0.2);
    }

    #[test]
    fn disjoint_samples_have_full_advantage() {
        let e = estimate_advantage(&samples(0, 200), &samples(200, 200));
        assert_eq!(e.advantage, 1.0);
        assert!(e.ci_low > 0.95 && e.ci_high <= 1.0);
        let flipped = estimate_advantage(&samples(200, 200), &samples(0, 200));
        assert!((flipped.ci_low - e.ci_low).abs() < 1e-12);
    }

    #[test]
    fn newcombe_close_to_wald_for_mid_rates() {
        let (n, k0, k1) = (5000, 2000, 3000);
        let e = estimate_advantage(&samples(k0, n), &samples(k1, n));
        let (p0, p1) = (0.4, 0.6);
        let se = (p0 * (1.0 - p0) / n as f64 + p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((e.advantage - 0.2).abs() < 1e-12);
        assert!((e.ci_low - (0.2 - Z95 * se)).abs() < 2e-3);
        assert!((e.ci_high - (0.2 + Z95 * se)).abs() < 2e-3);
    }

    #[test]
    fn wilson_known_value() {
        // 8 of 10, z = 1.96.
        let (lo, hi) = wilson_interval(8, 10, 1.96);
        assert!((lo - 0.4902).abs() < 1e-3 && (hi - 0.9433).abs() < 1e-3);
    }

    #[test]
    fn empirical_td_bounds() {
        assert_eq!(empirical_trace_distance(&[1, 1, 2, 2], &[1, 2, 1, 2]), 0.0);
        assert_eq!(empirical_trace_distance(&[1, 1], &[2, 2]), 1.0);
        assert!((empirical_trace_distance(&[1, 2, 3, 4], &[1, 1, 1, 1]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rate_check_binomial() {
        let r = rate_check(&samples(50, 100), &[0.5; 100]);
        assert_eq!(r.expected, 50.0);
        assert_eq!(r.sigma, 5.0);
        assert!(r.within(0.0));
        let r = rate_check(&samples(80, 100), &[0.5; 100]);
        assert!((r.z_score - 6.0).abs() < 1e-12 && !r.within(4.0));
    }
}
