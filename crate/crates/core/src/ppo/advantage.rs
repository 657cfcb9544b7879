//! Generalized advantage estimation and λ-returns.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Advantages {
    pub advantages: Vec<f64>,
    /// λ-return critic targets.
    pub returns: Vec<f64>,
}

/// GAE over a time-ordered stream; `next_values[t]` is `V(s_{t+1})`.
///
/// Transitions with `done` stop both the bootstrap and the recursion. The
/// final transition bootstraps from its own `next_values` entry.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<Advantages> {
    let n = rewards.len();
    for (name, len) in [("values", values.len()), ("next_values", next_values.len()), ("dones", dones.len())] {
        if len != n {
            return Err(Error::InvalidArgument(format!("gae: {name} has length {len}, expected {n}")));
        }
    }
    let mut advantages = vec![0.0; n];
    let mut returns = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_ret = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let (a_tail, g_tail) = if t + 1 == n || dones[t] {
            (0.0, next_values[t])
        } else {
            (next_adv, next_ret)
        };
        let delta = (rewards[t] + gamma * live * next_values[t]) - values[t];
        advantages[t] = delta + gamma * lambda * live * a_tail;
        returns[t] = rewards[t] + gamma * live * ((1.0 - lambda) * next_values[t] + lambda * g_tail);
        next_adv = advantages[t];
        next_ret = returns[t];
    }
    Ok(Advantages { advantages, returns })
}

/// `(x − mean) / (std + 1e-8)` with the population standard deviation.
pub fn normalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    x.iter().map(|v| (v - mean) / (std + 1e-8)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `Σ_l (γλ)^l δ_{t+l}` within the episode containing `t`.
    fn direct_sum(r: &[f64], v: &[f64], nv: &[f64], d: &[bool], g: f64, l: f64) -> Vec<f64> {
        let n = r.len();
        (0..n)
            .map(|t| {
                let mut acc = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    let live = if d[k] { 0.0 } else { 1.0 };
                    acc += w * (r[k] + g * live * nv[k] - v[k]);
                    if d[k] {
                        break;
                    }
                    w *= g * l;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let r = [1.0, 2.0, 3.0];
        let v = [0.5, 0.1, -0.2];
        let nv = [0.1, -0.2, 0.7];
        let d = [false, false, true];
        let out = gae(&r, &v, &nv, &d, 0.9, 0.0).unwrap();
        for t in 0..3 {
            let live = if d[t] { 0.0 } else { 1.0 };
            let y = r[t] + 0.9 * live * nv[t];
            assert_eq!(out.advantages[t], y - v[t]);
            assert_eq!(out.returns[t], y);
        }
    }

    #[test]
    fn monte_carlo_at_unit_lambda_and_gamma() {
        let r = [1.0, -2.0, 0.5, 4.0];
        let v = [0.3, 0.2, 0.1, 0.0];
        let nv = [0.2, 0.1, 0.0, 9.9];
        let d = [false, false, false, true];
        let out = gae(&r, &v, &nv, &d, 1.0, 1.0).unwrap();
        let mc = [3.5, 2.5, 4.5, 4.0];
        for t in 0..4 {
            assert!((out.advantages[t] - (mc[t] - v[t])).abs() < 1e-12);
            assert!((out.returns[t] - mc[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(gae(&[1.0], &[], &[0.0], &[false], 0.9, 0.9).is_err());
    }

    #[test]
    fn normalized_moments() {
        let z = normalize(&[1.0, 2.0, 3.0, 10.0]);
        let m: f64 = z.iter().sum::<f64>() / 4.0;
        let v: f64 = z.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(m.abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn matches_direct_sum(
            data in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, proptest::bool::weighted(0.2)), 1..30),
            gamma in 0.0f64..1.0,
            lambda in 0.0f64..1.0,
        ) {
            let r: Vec<f64> = data.iter().map(|x| x.0).collect();
            let v: Vec<f64> = data.iter().map(|x| x.1).collect();
            let nv: Vec<f64> = data.iter().map(|x| x.2).collect();
            let d: Vec<bool> = data.iter().map(|x| x.3).collect();
            let out = gae(&r, &v, &nv, &d, gamma, lambda).unwrap();
            let oracle = direct_sum(&r, &v, &nv, &d, gamma, lambda);
            for (a, b) in out.advantages.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn normalization_preserves_order_under_rescaling(
            x in proptest::collection::vec(-10.0f64..10.0, 2..20),
            k in 0.1f64..10.0,
        ) {
            let a = normalize(&x);
            let scaled: Vec<f64> = x.iter().map(|v| k * v).collect();
            let b = normalize(&scaled);
            let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |bi, (i, &x)| if x > v[bi] { i } else { bi });
            prop_assert_eq!(argmax(&a), argmax(&b));
        }
    }
}
