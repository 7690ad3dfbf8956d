//! Welford online mean/variance accumulation, used to aggregate replica
//! ensembles without catastrophic cancellation.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default)]
pub struct OnlineStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl OnlineStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance; zero below two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    /// Standard error of the mean across the pushed observations.
    pub fn std_error(&self) -> f64 {
        if self.count > 1 {
            (self.sample_variance() / self.count as f64).sqrt()
        } else {
            0.0
        }
    }

    pub fn summary(&self) -> MetricSummary {
        MetricSummary {
            mean: self.mean(),
            stderr: self.std_error(),
            n: self.count,
        }
    }
}

/// Ensemble mean and standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl MetricSummary {
    /// Standard error of the difference between two ensemble means.
    pub fn combined_stderr(&self, other: &MetricSummary) -> f64 {
        (self.stderr * self.stderr + other.stderr * other.stderr).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_two_pass_computation() {
        let data: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 * 0.37 - 15.0)
            .collect();
        let mut stats = OnlineStats::new();
        for &x in &data {
            stats.push(x);
        }
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (data.len() - 1) as f64;
        assert!((stats.mean() - mean).abs() < 1e-12);
        assert!((stats.sample_variance() - var).abs() < 1e-10);
        assert!((stats.std_error() - (var / data.len() as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_observation_has_zero_stderr() {
        let mut stats = OnlineStats::new();
        stats.push(3.5);
        assert_eq!(stats.mean(), 3.5);
        assert_eq!(stats.std_error(), 0.0);
        assert_eq!(stats.sample_variance(), 0.0);
    }

    #[test]
    fn empty_mean_is_nan() {
        assert!(OnlineStats::new().mean().is_nan());
    }
}
