//! Minibatch actor-critic updates.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{actor_loss_grad, critic_loss_grad, ActorBatch, WeightedLogLik};
use super::policy::{Actor, Critic};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub entropy_coef: f64,
    /// GAE λ for the vanilla baseline.
    pub gae_lambda: f64,
    pub minibatch_size: usize,
    pub normalize_advantages: bool,
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.1,
            gamma: 0.99,
            epochs: 10,
            entropy_coef: 0.001,
            gae_lambda: 0.95,
            minibatch_size: 25,
            normalize_advantages: true,
            hidden: 256,
            actor_lr: 1e-5,
            critic_lr: 1e-5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::InvalidConfig(format!("clip {} outside (0, 1)", self.clip)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::InvalidConfig(format!("gae_lambda {} outside [0, 1]", self.gae_lambda)));
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("epochs, minibatch_size, and hidden must be ≥ 1".into()));
        }
        if !(self.entropy_coef >= 0.0) {
            return Err(Error::InvalidConfig("entropy_coef must be nonnegative".into()));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Actor, critic, and their optimizer states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub actor: Actor,
    pub critic: Critic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        power_limits: &[f64],
        cfg: &PpoConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let actor = Actor::new(obs_dim, cfg.hidden, power_limits, rng)?;
        let critic = Critic::new(obs_dim, cfg.hidden, rng)?;
        Ok(Self {
            actor_opt: Adam::new(AdamConfig::with_lr(cfg.actor_lr), &actor),
            critic_opt: Adam::new(AdamConfig::with_lr(cfg.critic_lr), &critic),
            actor,
            critic,
        })
    }
}

/// Full on-policy batch with fixed advantages and critic targets.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoBatch {
    pub states: Tensor,
    pub pre_squash: Tensor,
    pub noise: Tensor,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
}

impl PpoBatch {
    pub fn from_trajectory(traj: &Trajectory, advantages: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        let n = traj.len();
        if advantages.len() != n || targets.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} advantages and {} targets for {n} transitions",
                advantages.len(),
                targets.len()
            )));
        }
        Ok(Self {
            states: traj.states()?,
            pre_squash: traj.pre_squash()?,
            noise: traj.noise()?,
            old_log_probs: traj.log_probs(),
            advantages,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    fn minibatch(&self, idx: &[usize]) -> (ActorBatch, Tensor, Vec<f64>) {
        let states = self.states.select_rows(idx);
        let actor = ActorBatch {
            states: states.clone(),
            pre_squash: self.pre_squash.select_rows(idx),
            noise: self.noise.select_rows(idx),
            old_log_probs: idx.iter().map(|&i| self.old_log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
        };
        let targets = idx.iter().map(|&i| self.targets[i]).collect();
        (actor, states, targets)
    }
}

/// Means over all minibatch steps of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub auxiliary_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub steps: usize,
}

/// Runs `cfg.epochs` shuffled passes of minibatch Adam steps on both networks.
///
/// `aux` adds a fixed weighted log-likelihood term to the actor steps of the
/// first epoch, scaled by the minibatch share so it is applied once in total.
pub fn ppo_update<R: Rng + ?Sized>(
    agent: &mut PpoAgent,
    batch: &PpoBatch,
    cfg: &PpoConfig,
    aux: Option<&WeightedLogLik>,
    rng: &mut R,
) -> Result<UpdateReport> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("PPO batch".into()));
    }
    let aux = aux.filter(|a| !a.is_empty());
    let mut idx: Vec<usize> = (0..batch.len()).collect();
    let mut rep = UpdateReport::default();
    for epoch in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.minibatch_size) {
            let (ab, states, targets) = batch.minibatch(chunk);
            let share = chunk.len() as f64 / batch.len() as f64;
            let scaled = aux.filter(|_| epoch == 0).map(|a| a.scaled(share));
            let (loss, g) = actor_loss_grad(&agent.actor, &ab, cfg.clip, cfg.entropy_coef, scaled.as_ref())?;
            agent.actor_opt.step(&mut agent.actor, &g);
            let (vloss, cg) = critic_loss_grad(&agent.critic, &states, &targets)?;
            agent.critic_opt.step(&mut agent.critic, &cg);

            rep.policy_loss += loss.surrogate;
            rep.entropy += loss.entropy;
            rep.auxiliary_loss += loss.auxiliary;
            rep.clip_fraction += loss.clip_fraction;
            rep.approx_kl += loss.approx_kl;
            rep.value_loss += vloss;
            rep.steps += 1;
        }
    }
    let k = rep.steps as f64;
    rep.policy_loss /= k;
    rep.value_loss /= k;
    rep.entropy /= k;
    rep.clip_fraction /= k;
    rep.approx_kl /= k;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gaussian::squash;
    use crate::ppo::advantage::normalize;
    use crate::ppo::trajectory::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit_batch(agent: &PpoAgent, obs: &[f64], n: usize, rng: &mut ChaCha8Rng) -> PpoBatch {
        let mut traj = Trajectory::new();
        for _ in 0..n {
            let s = agent.actor.sample(obs, rng).unwrap();
            let r = -s.action.iter().map(|a| (a - 0.8) * (a - 0.8)).sum::<f64>();
            traj.push(Transition {
                state: obs.to_vec(),
                pre_squash: s.pre_squash,
                noise: s.noise,
                action: s.action,
                reward: r,
                done: true,
                next_state: obs.to_vec(),
                log_prob: s.log_prob,
                value: agent.critic.value(obs).unwrap(),
            })
            .unwrap();
        }
        let adv: Vec<f64> = traj.rewards().iter().zip(traj.values()).map(|(r, v)| r - v).collect();
        PpoBatch::from_trajectory(&traj, normalize(&adv), traj.rewards()).unwrap()
    }

    fn cfg() -> PpoConfig {
        PpoConfig { hidden: 16, actor_lr: 3e-3, critic_lr: 3e-3, epochs: 4, ..Default::default() }
    }

    #[test]
    fn bandit_mean_moves_toward_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obs = [1.0, 0.0];
        let mut agent = PpoAgent::new(2, &[1.0], &cfg(), &mut rng).unwrap();
        let gap = |a: &PpoAgent| {
            let m = a.actor.deterministic(&obs).unwrap();
            m.action.iter().map(|x| (x - 0.8).abs()).sum::<f64>()
        };
        let before = gap(&agent);
        for _ in 0..100 {
            let b = bandit_batch(&agent, &obs, 50, &mut rng);
            ppo_update(&mut agent, &b, &cfg(), None, &mut rng).unwrap();
        }
        let after = gap(&agent);
        assert!(after < 0.5 * before, "gap {before} -> {after}");
        assert!(squash(0.0, 1.0) == 0.5);
    }

    #[test]
    fn zero_advantages_leave_means_to_entropy_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = PpoConfig { entropy_coef: 0.0, ..cfg() };
        let mut agent = PpoAgent::new(2, &[1.0], &c, &mut rng).unwrap();
        let mut b = bandit_batch(&agent, &[0.5, 0.5], 20, &mut rng);
        b.advantages.iter_mut().for_each(|a| *a = 0.0);
        let before = agent.actor.clone();
        ppo_update(&mut agent, &b, &c, None, &mut rng).unwrap();
        assert_eq!(agent.actor, before);
    }

    #[test]
    fn identical_seeds_identical_parameters() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut agent = PpoAgent::new(2, &[1.0], &cfg(), &mut rng).unwrap();
            let b = bandit_batch(&agent, &[0.2, 0.1], 30, &mut rng);
            ppo_update(&mut agent, &b, &cfg(), None, &mut rng).unwrap();
            agent
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_batch_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut agent = PpoAgent::new(2, &[1.0], &cfg(), &mut rng).unwrap();
        let b = PpoBatch {
            states: Tensor::zeros(&[0, 2]),
            pre_squash: Tensor::zeros(&[0, 2]),
            noise: Tensor::zeros(&[0, 2]),
            old_log_probs: vec![],
            advantages: vec![],
            targets: vec![],
        };
        assert!(ppo_update(&mut agent, &b, &cfg(), None, &mut rng).is_err());
    }
}
