//! Batch-means estimates for correlated observation sequences.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Smallest batch count accepted by [`crate::sim::SimConfig`].
pub const MIN_BATCHES: usize = 30;

/// Point estimate with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn stderr(&self) -> f64 {
        self.ci95 / Z95
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }

    /// Whether the two 95% intervals intersect.
    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// `|mean - target| ≤ sigmas · stderr`.
    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr()
    }
}

/// Pooled mean plus the standard error of the batch means.
///
/// `sums[b] / counts[b]` is the mean of batch `b`. Batches with a zero count
/// are ignored.
pub fn batch_estimate(sums: &[f64], counts: &[f64]) -> Estimate {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return Estimate {
            mean: f64::NAN,
            ci95: f64::NAN,
        };
    }
    let mean = sums.iter().sum::<f64>() / total;
    let means: Vec<f64> = sums
        .iter()
        .zip(counts)
        .filter(|&(_, &c)| c > 0.0)
        .map(|(s, c)| s / c)
        .collect();
    let n = means.len();
    let ci95 = if n < 2 {
        0.0
    } else {
        let avg = means.iter().sum::<f64>() / n as f64;
        let var = means.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z95 * (var / n as f64).sqrt()
    };
    Estimate { mean, ci95 }
}

/// Batch index of observation `i` out of `total` split into `batches` near-equal runs.
pub fn batch_of(i: u64, total: u64, batches: usize) -> usize {
    ((i as u128 * batches as u128) / total as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_zero_width() {
        let est = batch_estimate(&[10.0; 40], &[5.0; 40]);
        assert_eq!(est.mean, 2.0);
        assert_eq!(est.ci95, 0.0);
    }

    #[test]
    fn known_batch_means() {
        // batch means 1, 2, 3 with equal counts: sd = 1, stderr = 1/sqrt(3)
        let est = batch_estimate(&[2.0, 4.0, 6.0], &[2.0, 2.0, 2.0]);
        assert_eq!(est.mean, 2.0);
        assert!((est.stderr() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn batches_partition_evenly() {
        let mut counts = [0; 30];
        for i in 0..1000 {
            counts[batch_of(i, 1000, 30)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 33 || c == 34));
        assert_eq!(counts.iter().sum::<i32>(), 1000);
    }

    #[test]
    fn overlap_logic() {
        let a = Estimate {
            mean: 1.0,
            ci95: 0.1,
        };
        let b = Estimate {
            mean: 1.15,
            ci95: 0.1,
        };
        let c = Estimate {
            mean: 1.3,
            ci95: 0.1,
        };
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c));
    }
}
