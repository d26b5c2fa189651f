//! Confidence intervals and rank statistics used by the Monte Carlo paths.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, StudentsT};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Below this many successes (or failures) the exact binomial interval is used.
pub const EXACT_BELOW: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn exact(v: f64) -> Self {
        Interval { point: v, lower: v, upper: v }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// 99% interval for a binomial proportion: normal approximation, or
/// Clopper–Pearson when successes or failures number fewer than 30.
pub fn binomial_interval(successes: u64, trials: u64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    if successes < EXACT_BELOW || trials - successes < EXACT_BELOW {
        return clopper_pearson(successes, trials, 0.01);
    }
    let h = Z99 * (p * (1.0 - p) / n).sqrt();
    Interval { point: p, lower: (p - h).max(0.0), upper: (p + h).min(1.0) }
}

/// Exact two-sided interval at level `1 - alpha`.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> Interval {
    let p = k as f64 / n as f64;
    let lower = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(alpha / 2.0)
    };
    let upper = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    Interval { point: p, lower, upper }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub rho: f64,
    /// One-sided p-value for `rho < 0`.
    pub p_negative: f64,
    pub n: usize,
}

/// Spearman correlation with a Student-t approximation for the p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> RankTest {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let rho = pearson(&ranks(x), &ranks(y));
    let df = n as f64 - 2.0;
    let p_negative = if n < 3 {
        1.0
    } else if rho <= -1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho).max(f64::MIN_POSITIVE)).sqrt();
        StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
    };
    RankTest { rho, p_negative, n }
}
