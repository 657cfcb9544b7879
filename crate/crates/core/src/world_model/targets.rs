//! Critic targets mixing real and model-predicted TD targets.

use crate::error::{Error, Result};

/// `y = (1−λ)[r + γ(1−d)V(s')] + λ[r̂ + γ(1−d)V(ŝ')]`.
pub fn boosted_targets(
    rewards: &[f64],
    dones: &[bool],
    next_values: &[f64],
    pred_rewards: &[f64],
    pred_next_values: &[f64],
    gamma: f64,
    lambda_wm: f64,
) -> Result<Vec<f64>> {
    let n = rewards.len();
    for (name, len) in [
        ("dones", dones.len()),
        ("next_values", next_values.len()),
        ("pred_rewards", pred_rewards.len()),
        ("pred_next_values", pred_next_values.len()),
    ] {
        if len != n {
            return Err(Error::InvalidArgument(format!(
                "boosted_targets: {name} has length {len}, expected {n}"
            )));
        }
    }
    Ok((0..n)
        .map(|t| {
            let live = if dones[t] { 0.0 } else { 1.0 };
            let real = rewards[t] + gamma * live * next_values[t];
            let model = pred_rewards[t] + gamma * live * pred_next_values[t];
            (1.0 - lambda_wm) * real + lambda_wm * model
        })
        .collect())
}
