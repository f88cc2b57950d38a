//! Small statistical helpers shared by the Monte Carlo routines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A value with an attached standard error (zero for deterministic quadrature).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// `|value - target| <= k * stderr + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + slack
    }
}

/// Monte Carlo estimate of a mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    /// Fraction of paths that were right-censored at the horizon.
    pub truncation_fraction: f64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], truncated: usize) -> Self {
        let (mean, stderr) = mean_stderr(samples);
        McEstimate {
            mean,
            stderr,
            paths: samples.len(),
            truncation_fraction: if samples.is_empty() { 0.0 } else { truncated as f64 / samples.len() as f64 },
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, stderr: self.stderr }
    }
}

/// Pairwise summation; the result does not depend on how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error `std / sqrt(n)`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Standard error of a Bernoulli fraction.
pub fn fraction_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Independent generator for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, s) = mean_stderr(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        let v = normal_cdf(1.959963984540054);
        assert!((v - 0.975).abs() < 1e-10, "{v:e}");
    }

    #[test]
    fn streams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 1).random();
        let c: u64 = stream_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
