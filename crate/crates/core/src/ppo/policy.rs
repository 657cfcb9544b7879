//! Squashed-Gaussian actor and state-value critic.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::Action;
use crate::error::{Error, Result};
use crate::nn::gaussian::{squash, squashed_log_prob};
use crate::nn::{Mlp, MlpSpec, Parameterized};
use crate::tensor::Tensor;

pub const LOG_STD_INIT: f64 = -0.5;

/// Policy over `K` offloading ratios followed by `K` transmit powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub net: Mlp,
    pub log_std: Tensor,
    /// Upper bound of each action dimension (1 for ratios, `P_max` for powers).
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySample {
    pub pre_squash: Vec<f64>,
    /// Standard-normal noise that produced `pre_squash`.
    pub noise: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

impl PolicySample {
    /// Splits the flat action into the environment's ratio and power vectors.
    pub fn to_env_action(&self) -> Action {
        let k = self.action.len() / 2;
        Action {
            alpha: self.action[..k].to_vec(),
            power_w: self.action[k..].to_vec(),
        }
    }
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: usize,
        power_limits: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let k = power_limits.len();
        if k == 0 {
            return Err(Error::InvalidConfig("actor needs at least one user".into()));
        }
        let net = Mlp::new(&MlpSpec::two_layer(obs_dim, hidden, 2 * k), rng)?;
        let mut scales = vec![1.0; k];
        scales.extend_from_slice(power_limits);
        Ok(Self {
            net,
            log_std: Tensor::full(&[2 * k], LOG_STD_INIT),
            scales,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.scales.len()
    }

    /// Pre-squash means for a batch of states.
    pub fn means(&self, states: &Tensor) -> Result<Tensor> {
        self.net.forward(states)
    }

    fn single_mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::matrix(1, obs.len(), obs.to_vec())?;
        Ok(self.means(&x)?.into_data())
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<PolicySample> {
        let mean = self.single_mean(obs)?;
        let noise: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        Ok(self.sample_from_noise(&mean, noise))
    }

    /// The mean action, used for evaluation.
    pub fn deterministic(&self, obs: &[f64]) -> Result<PolicySample> {
        let mean = self.single_mean(obs)?;
        let noise = vec![0.0; mean.len()];
        Ok(self.sample_from_noise(&mean, noise))
    }

    fn sample_from_noise(&self, mean: &[f64], noise: Vec<f64>) -> PolicySample {
        let pre_squash: Vec<f64> = mean
            .iter()
            .zip(self.log_std.data())
            .zip(&noise)
            .map(|((&m, &ls), &e)| m + ls.exp() * e)
            .collect();
        let action = pre_squash
            .iter()
            .zip(&self.scales)
            .map(|(&u, &s)| squash(u, s))
            .collect();
        let log_prob = squashed_log_prob(&pre_squash, mean, self.log_std.data(), &self.scales);
        PolicySample {
            pre_squash,
            noise,
            action,
            log_prob,
        }
    }

    /// Log-densities of stored pre-squash actions under the current policy.
    pub fn log_probs(&self, states: &Tensor, pre_squash: &Tensor) -> Result<Vec<f64>> {
        let means = self.means(states)?;
        if means.shape() != pre_squash.shape() {
            return Err(Error::shape("Actor::log_probs", means.shape(), pre_squash.shape()));
        }
        Ok((0..means.rows())
            .map(|r| {
                squashed_log_prob(pre_squash.row(r), means.row(r), self.log_std.data(), &self.scales)
            })
            .collect())
    }
}

impl Parameterized for Actor {
    fn params(&self) -> Vec<&Tensor> {
        let mut p = self.net.params();
        p.push(&self.log_std);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.net.params_mut();
        p.push(&mut self.log_std);
        p
    }

    fn zeros_like(&self) -> Self {
        Self {
            net: self.net.zeros_like(),
            log_std: Tensor::zeros(self.log_std.shape()),
            scales: self.scales.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            net: Mlp::new(&MlpSpec::two_layer(obs_dim, hidden, 1), rng)?,
        })
    }

    pub fn values(&self, states: &Tensor) -> Result<Vec<f64>> {
        Ok(self.net.forward(states)?.into_data())
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.values(&Tensor::matrix(1, obs.len(), obs.to_vec())?)?[0])
    }
}

impl Parameterized for Critic {
    fn params(&self) -> Vec<&Tensor> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.net.params_mut()
    }

    fn zeros_like(&self) -> Self {
        Self {
            net: self.net.zeros_like(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn actions_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let actor = Actor::new(5, 8, &[2.0, 1.5], &mut rng).unwrap();
        for _ in 0..200 {
            let obs: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = actor.sample(&obs, &mut rng).unwrap().to_env_action();
            assert!(a.alpha.iter().all(|x| (0.0..=1.0).contains(x)));
            assert!(a.power_w[0] <= 2.0 && a.power_w[1] <= 1.5);
        }
    }

    #[test]
    fn stored_log_prob_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Actor::new(3, 8, &[2.0], &mut rng).unwrap();
        let obs = [0.1, -0.4, 0.9];
        let s = actor.sample(&obs, &mut rng).unwrap();
        let states = Tensor::matrix(1, 3, obs.to_vec()).unwrap();
        let u = Tensor::matrix(1, 2, s.pre_squash.clone()).unwrap();
        let lp = actor.log_probs(&states, &u).unwrap()[0];
        assert!((lp - s.log_prob).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_init() {
        let a = Actor::new(4, 8, &[1.0], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = Actor::new(4, 8, &[1.0], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }
}
