//! Monte Carlo estimates and their reproducible aggregation.

use serde::{Deserialize, Serialize};

/// Output contract of every Monte Carlo estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// sample standard deviation over `√n`
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
    pub truncated_fraction: f64,
}

impl MCEstimate {
    /// A value known without sampling error.
    pub fn exact(mean: f64, n: u64, seed: u64) -> Self {
        Self { mean, std_error: 0.0, n, seed, truncated_fraction: 0.0 }
    }

    /// Whether `value` lies within `k` standard errors plus `slack`.
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + slack
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { mean: self.mean * s, std_error: self.std_error * s.abs(), ..*self }
    }
}

/// Running mean and centred second moment (Welford), mergeable in a fixed
/// order so that results depend only on the chunking.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub truncated: u64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64, truncated: bool) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.truncated += truncated as u64;
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
            truncated: self.truncated + other.truncated,
        }
    }

    /// Pairwise (tree) reduction in slice order.
    pub fn reduce(parts: &[Moments]) -> Moments {
        match parts.len() {
            0 => Moments::default(),
            1 => parts[0],
            k => {
                let (a, b) = parts.split_at(k / 2);
                Moments::reduce(a).merge(&Moments::reduce(b))
            }
        }
    }

    pub fn finish(&self, seed: u64) -> MCEstimate {
        let n = self.n.max(1) as f64;
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        MCEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / n).sqrt(),
            n: self.n,
            seed,
            truncated_fraction: self.truncated as f64 / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x, false));
        let parts: Vec<Moments> = xs
            .chunks(64)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x, false));
                m
            })
            .collect();
        let r = Moments::reduce(&parts);
        assert!((r.mean - all.mean).abs() < 1e-12);
        assert!((r.m2 - all.m2).abs() < 1e-8 * all.m2);
        let e = r.finish(0);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((e.std_error - (var / 1000.0).sqrt()).abs() < 1e-12);
    }
}
