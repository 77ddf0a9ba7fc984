//! Log-space arithmetic helpers.

use alloc::vec::Vec;
use libm::{exp, log};

/// `log(sum(exp(xs)))`, max-shifted. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + log(sum)
}

/// `log(mean(exp(xs)))`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    log_sum_exp(xs) - log(xs.len() as f64)
}

/// Normalize log-weights into probabilities that sum to one.
///
/// Returns `None` when every entry is `-inf`.
pub fn normalize_log(xs: &[f64]) -> Option<Vec<f64>> {
    let lse = log_sum_exp(xs);
    if !lse.is_finite() {
        return None;
    }
    Some(xs.iter().map(|&x| exp(x - lse)).collect())
}

/// Streaming log-sum-exp with a running maximum.
///
/// Two accumulators can be merged, which lets enumeration ranges be summed
/// independently and combined afterwards.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAccumulator {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumAccumulator {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled_sum = self.scaled_sum * exp(self.max - x) + 1.0;
            self.max = x;
        } else {
            self.scaled_sum += exp(x - self.max);
        }
    }

    pub fn merge(&mut self, other: &LogSumAccumulator) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.scaled_sum = self.scaled_sum * exp(self.max - other.max) + other.scaled_sum;
            self.max = other.max;
        } else {
            self.scaled_sum += other.scaled_sum * exp(other.max - self.max);
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + log(self.scaled_sum)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_direct() {
        let xs = [0.1, -2.0, 3.5];
        let direct = log(xs.iter().map(|&x| exp(x)).sum::<f64>());
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
    }

    #[test]
    fn lse_survives_underflow() {
        let xs = [-1000.0, -1000.0];
        assert!((log_sum_exp(&xs) - (-1000.0 + log(2.0))).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mut whole = LogSumAccumulator::new();
        xs.iter().for_each(|&x| whole.add(x));
        let mut left = LogSumAccumulator::new();
        let mut right = LogSumAccumulator::new();
        xs[..17].iter().for_each(|&x| left.add(x));
        xs[17..].iter().for_each(|&x| right.add(x));
        left.merge(&right);
        assert!((left.value() - log_sum_exp(&xs)).abs() < 1e-12);
        assert!((whole.value() - log_sum_exp(&xs)).abs() < 1e-12);
    }

    #[test]
    fn normalize_sums_to_one() {
        let p = normalize_log(&[-800.0, -801.0, -799.5]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(normalize_log(&[f64::NEG_INFINITY]).is_none());
    }
}
