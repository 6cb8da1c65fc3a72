//! Cosine similarity between random vectors as dimension grows.
//!
//! Two regimes: independent Gaussian pairs, whose cosine concentrates at zero
//! as `1/sqrt(d)`, and "corrupted" pairs sharing a common mean, whose cosine
//! concentrates at `1/(1+sigma^2)` — alignment survives high dimension when
//! the underlying signal is shared.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gate::cosine_slices;
use crate::harness::rng::ExperimentRng;

/// Summary of the cosine distribution over sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineStats {
    pub dim: usize,
    pub pairs: usize,
    pub sigma: f64,
    pub mean_cos: f64,
    pub median_cos: f64,
    pub mean_abs_cos: f64,
    pub median_abs_cos: f64,
}

fn summarize(dim: usize, sigma: f64, mut cosines: Vec<f64>) -> CosineStats {
    let pairs = cosines.len();
    let mean_cos = cosines.iter().sum::<f64>() / pairs as f64;
    let mean_abs_cos = cosines.iter().map(|c| c.abs()).sum::<f64>() / pairs as f64;
    let median_cos = median_in_place(&mut cosines);
    let mut abs: Vec<f64> = cosines.iter().map(|c| c.abs()).collect();
    let median_abs_cos = median_in_place(&mut abs);
    CosineStats {
        dim,
        pairs,
        sigma,
        mean_cos,
        median_cos,
        mean_abs_cos,
        median_abs_cos,
    }
}

fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn gaussian_vec(rng: &mut ExperimentRng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Cosines of `n` independent pairs `theta_i ~ N(0, sigma^2 I_d)`.
pub fn random_cosine_stats(d: usize, n: usize, sigma: f64, rng: &mut ExperimentRng) -> CosineStats {
    assert!(d >= 1 && n >= 1);
    let cosines = (0..n)
        .map(|_| {
            let a = gaussian_vec(rng, d, sigma);
            let b = gaussian_vec(rng, d, sigma);
            cosine_slices(&a, &b)
        })
        .collect();
    summarize(d, sigma, cosines)
}

/// Cosines of `n` pairs sharing a mean: `mu ~ N(0, I_d)`,
/// `theta_i ~ N(mu, sigma^2 I_d)`.
pub fn corrupted_cosine_stats(
    d: usize,
    n: usize,
    sigma: f64,
    rng: &mut ExperimentRng,
) -> CosineStats {
    assert!(d >= 1 && n >= 1);
    let cosines = (0..n)
        .map(|_| {
            let mu = gaussian_vec(rng, d, 1.0);
            let noise = |rng: &mut ExperimentRng| -> Vec<f64> {
                mu.iter()
                    .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            let a = noise(rng);
            let b = noise(rng);
            cosine_slices(&a, &b)
        })
        .collect();
    summarize(d, sigma, cosines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::child_rng;

    #[test]
    fn one_dimensional_cosines_are_unit() {
        let mut rng = child_rng(11, 0);
        let stats = random_cosine_stats(1, 200, 1.0, &mut rng);
        assert_eq!(stats.mean_abs_cos, 1.0);
        assert_eq!(stats.median_abs_cos, 1.0);
    }

    #[test]
    fn high_dim_random_cosine_collapses() {
        let mut rng = child_rng(11, 1);
        let stats = random_cosine_stats(10_000, 200, 1.0, &mut rng);
        assert!(stats.median_abs_cos < 0.05, "{}", stats.median_abs_cos);
    }

    #[test]
    fn scale_does_not_change_random_stats() {
        let a = random_cosine_stats(50, 300, 1.0, &mut child_rng(5, 2));
        let b = random_cosine_stats(50, 300, 123.0, &mut child_rng(5, 2));
        assert!((a.mean_cos - b.mean_cos).abs() < 1e-12);
        assert!((a.median_abs_cos - b.median_abs_cos).abs() < 1e-12);
    }

    #[test]
    fn corrupted_with_zero_noise_is_exactly_one() {
        let mut rng = child_rng(11, 3);
        let stats = corrupted_cosine_stats(64, 50, 0.0, &mut rng);
        assert_eq!(stats.mean_cos, 1.0);
    }

    #[test]
    fn corrupted_high_dim_approaches_analytic_limit() {
        let mut rng = child_rng(11, 4);
        let stats = corrupted_cosine_stats(10_000, 200, 1.0, &mut rng);
        // Limit is 1/(1+sigma^2) = 0.5.
        assert!((stats.mean_cos - 0.5).abs() < 0.02, "{}", stats.mean_cos);
    }
}
