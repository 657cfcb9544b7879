//! Diagonal Gaussian policy head with a sigmoid squash.
//!
//! A pre-squash sample `u = μ + σ ε` is mapped to `a = scale · sigmoid(u)`,
//! so each action dimension lands in `[0, scale]`. The density of `a`
//! carries the change-of-variables term `−ln(scale · s(u) · (1 − s(u)))`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{sigmoid, softplus};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln N(u; μ, σ)` summed over dimensions.
pub fn log_prob(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&u, &m), &ls)| {
            let z = (u - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

/// Partial derivatives of [`log_prob`] with respect to the mean and log-std.
pub fn log_prob_grad(u: &[f64], mean: &[f64], log_std: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(u.len());
    let mut d_log_std = Vec::with_capacity(u.len());
    for ((&u, &m), &ls) in u.iter().zip(mean).zip(log_std) {
        let inv_var = (-2.0 * ls).exp();
        let z2 = (u - m) * (u - m) * inv_var;
        d_mean.push((u - m) * inv_var);
        d_log_std.push(z2 - 1.0);
    }
    (d_mean, d_log_std)
}

pub fn squash(u: f64, scale: f64) -> f64 {
    scale * sigmoid(u)
}

/// Inverse of [`squash`] for `a` strictly inside `(0, scale)`.
pub fn unsquash(a: f64, scale: f64) -> f64 {
    let p = a / scale;
    (p / (1.0 - p)).ln()
}

/// `ln |d squash / du| = ln scale + ln s(u) + ln(1 − s(u))`.
pub fn log_squash_jacobian(u: f64, scale: f64) -> f64 {
    scale.ln() - softplus(-u) - softplus(u)
}

/// Derivative of [`log_squash_jacobian`] with respect to `u`.
pub fn log_squash_jacobian_grad(u: f64) -> f64 {
    1.0 - 2.0 * sigmoid(u)
}

/// Log-density of the squashed action `scale · sigmoid(u)`.
pub fn squashed_log_prob(u: &[f64], mean: &[f64], log_std: &[f64], scales: &[f64]) -> f64 {
    let correction: f64 = u
        .iter()
        .zip(scales)
        .map(|(&u, &s)| log_squash_jacobian(u, s))
        .sum();
    log_prob(u, mean, log_std) - correction
}

/// Differential entropy of the unsquashed diagonal Gaussian.
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|&ls| 0.5 * (1.0 + LN_2PI) + ls).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadSample {
    pub pre_squash: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// Draws `u = μ + σ ε`, squashes it, and returns the exact squashed log-density.
pub fn gaussian_head<R: Rng + ?Sized>(
    mean: &[f64],
    log_std: &[f64],
    scales: &[f64],
    rng: &mut R,
) -> HeadSample {
    let pre_squash: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(&m, &ls)| {
            let eps: f64 = rng.sample(StandardNormal);
            m + ls.exp() * eps
        })
        .collect();
    deterministic_head(pre_squash, mean, log_std, scales)
}

/// Head output for a given pre-squash value (e.g. the mean in evaluation).
pub fn deterministic_head(
    pre_squash: Vec<f64>,
    mean: &[f64],
    log_std: &[f64],
    scales: &[f64],
) -> HeadSample {
    let action = pre_squash
        .iter()
        .zip(scales)
        .map(|(&u, &s)| squash(u, s))
        .collect();
    let log_prob = squashed_log_prob(&pre_squash, mean, log_std, scales);
    HeadSample {
        pre_squash,
        action,
        log_prob,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_rel_error_slices, numerical_grad_vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vanishing_std_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mean = [0.3, -1.2];
        let s = gaussian_head(&mean, &[-40.0, -40.0], &[1.0, 2.0], &mut rng);
        assert!((s.pre_squash[0] - 0.3).abs() < 1e-15);
        assert!((s.pre_squash[1] + 1.2).abs() < 1e-15);
        assert!((s.action[1] - 2.0 * sigmoid(-1.2)).abs() < 1e-15);
    }

    #[test]
    fn density_at_mean_with_unit_std() {
        for d in 1..5 {
            let mean = vec![0.7; d];
            let lp = log_prob(&mean, &mean, &vec![0.0; d]);
            assert!((lp + 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let u = [0.4, -0.9, 1.3];
        let mean = [0.1, -0.2, 0.5];
        let ls = [-0.5, 0.2, -1.0];
        let (dm, dls) = log_prob_grad(&u, &mean, &ls);
        let nm = numerical_grad_vec(&mean, |m| log_prob(&u, m, &ls), 1e-5);
        let nls = numerical_grad_vec(&ls, |l| log_prob(&u, &mean, l), 1e-5);
        assert!(max_rel_error_slices(&dm, &nm) < 1e-4);
        assert!(max_rel_error_slices(&dls, &nls) < 1e-4);
        let g = log_squash_jacobian_grad(0.8);
        let n = numerical_grad_vec(&[0.8], |x| log_squash_jacobian(x[0], 3.0), 1e-5);
        assert!(max_rel_error_slices(&[g], &n) < 1e-4);
    }

    #[test]
    fn unsquash_inverts_squash() {
        for &u in &[-3.0, -0.1, 0.0, 2.5] {
            assert!((unsquash(squash(u, 2.0), 2.0) - u).abs() < 1e-12);
        }
    }

    /// Histogram density of squashed samples against the closed form.
    #[test]
    fn squashed_density_matches_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mean, ls, scale) = ([0.4], [-0.3], [2.0]);
        let n = 1_000_000;
        let bins = 40;
        let width = scale[0] / bins as f64;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let a = gaussian_head(&mean, &ls, &scale, &mut rng).action[0];
            counts[((a / width) as usize).min(bins - 1)] += 1;
        }
        for (b, &c) in counts.iter().enumerate().skip(1).take(bins - 2) {
            // Simpson integral of the closed-form density over the bin.
            let lo = b as f64 * width;
            let steps = 64;
            let h = width / steps as f64;
            let dens = |a: f64| squashed_log_prob(&[unsquash(a, scale[0])], &mean, &ls, &scale).exp();
            let mut integral = dens(lo) + dens(lo + width);
            for i in 1..steps {
                integral += dens(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let expected = integral * h / 3.0 * n as f64;
            let err = (c as f64 - expected).abs();
            assert!(err < 5.0 * expected.sqrt() + 1.0, "bin {b}: {c} vs {expected}");
        }
    }
}
