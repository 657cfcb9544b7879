//! Per-slot accuracy and hallucination draws around offline profile means.

use rand::Rng;
use rand_distr::{Beta, Distribution};

/// Beta draw with the given mean and concentration `a + b`.
///
/// Means of exactly 0 or 1 are degenerate and returned as is; `None`
/// concentration returns the mean.
pub fn sample_mean<R: Rng + ?Sized>(mean: f64, concentration: Option<f64>, rng: &mut R) -> f64 {
    let Some(c) = concentration else {
        return mean;
    };
    if mean <= 0.0 || mean >= 1.0 {
        return mean.clamp(0.0, 1.0);
    }
    match Beta::new(mean * c, (1.0 - mean) * c) {
        Ok(beta) => beta.sample(rng).clamp(0.0, 1.0),
        Err(_) => mean,
    }
}

/// Slot accuracy and hallucination for a model with the given offline means.
pub fn sample_slot_qos<R: Rng + ?Sized>(
    accuracy: f64,
    hallucination: f64,
    concentration: Option<f64>,
    rng: &mut R,
) -> (f64, f64) {
    let a = sample_mean(accuracy, concentration, rng);
    let h = sample_mean(hallucination, concentration, rng);
    (a, h)
}
