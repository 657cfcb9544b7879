//! Episode collection and per-episode statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, MecEnv, StepOutcome};
use crate::error::Result;
use crate::ppo::{Actor, Critic, PolicySample, Trajectory, Transition};

/// Decision rule used during a rollout.
#[derive(Clone, Copy, Debug)]
pub enum Policy<'a> {
    /// Sample from the actor.
    Stochastic(&'a Actor),
    /// Squashed actor mean.
    Mean(&'a Actor),
    /// α = 0 and no transmission.
    AlwaysLocal,
    /// α = 1 at full power.
    AlwaysOffload,
}

impl Policy<'_> {
    fn act<R: Rng + ?Sized>(&self, env: &MecEnv, obs: &[f64], rng: &mut R) -> Result<PolicySample> {
        match self {
            Policy::Stochastic(a) => a.sample(obs, rng),
            Policy::Mean(a) => a.deterministic(obs),
            Policy::AlwaysLocal | Policy::AlwaysOffload => {
                let k = env.num_mlus();
                let (alpha, power) = if matches!(self, Policy::AlwaysLocal) {
                    (vec![0.0; k], vec![0.0; k])
                } else {
                    (vec![1.0; k], env.power_limits())
                };
                let mut action = alpha;
                action.extend(power);
                Ok(PolicySample {
                    pre_squash: vec![0.0; 2 * k],
                    noise: vec![0.0; 2 * k],
                    action,
                    log_prob: 0.0,
                })
            }
        }
    }
}

/// Per-episode means over slots and users.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub slots: usize,
    pub reward: f64,
    pub return_sum: f64,
    /// Mean per-user latency per slot (s).
    pub latency: f64,
    pub accuracy: f64,
    pub hallucination: f64,
    /// Mean per-user energy per slot (J).
    pub energy: f64,
    pub alpha: f64,
    /// Share of slots with some user's accuracy below the floor.
    pub accuracy_violation_rate: f64,
    pub hallucination_violation_rate: f64,
    pub energy_violation_rate: f64,
}

impl EpisodeStats {
    fn record(&mut self, env: &MecEnv, out: &StepOutcome) {
        let p = env.params();
        let k = out.mlus.len() as f64;
        self.slots += 1;
        self.return_sum += out.reward;
        self.latency += out.total_latency() / k;
        self.accuracy += out.mlus.iter().map(|m| m.accuracy).sum::<f64>() / k;
        self.hallucination += out.mlus.iter().map(|m| m.hallucination).sum::<f64>() / k;
        self.energy += out.mlus.iter().map(|m| m.energy()).sum::<f64>() / k;
        self.alpha += out.mlus.iter().map(|m| m.alpha).sum::<f64>() / k;
        if out.mlus.iter().any(|m| m.accuracy < p.a_min) {
            self.accuracy_violation_rate += 1.0;
        }
        if out.mlus.iter().any(|m| m.hallucination > p.h_max) {
            self.hallucination_violation_rate += 1.0;
        }
        if out.mlus.iter().zip(&p.devices).any(|(m, d)| m.energy() > d.e_max_j) {
            self.energy_violation_rate += 1.0;
        }
    }

    fn finish(mut self) -> Self {
        let n = self.slots.max(1) as f64;
        self.reward = self.return_sum / n;
        for v in [
            &mut self.latency,
            &mut self.accuracy,
            &mut self.hallucination,
            &mut self.energy,
            &mut self.alpha,
            &mut self.accuracy_violation_rate,
            &mut self.hallucination_violation_rate,
            &mut self.energy_violation_rate,
        ] {
            *v /= n;
        }
        self
    }
}

/// Runs one episode from a fresh reset, storing every transition.
///
/// `critic`, when given, fills the stored value estimates. Stops at the
/// first `done` or after `max_steps`.
pub fn collect<R: Rng + ?Sized>(
    env: &mut MecEnv,
    policy: Policy<'_>,
    critic: Option<&Critic>,
    max_steps: usize,
    rng: &mut R,
) -> Result<(Trajectory, EpisodeStats)> {
    let k = env.num_mlus();
    env.reset();
    let mut traj = Trajectory::new();
    let mut stats = EpisodeStats::default();
    for _ in 0..max_steps {
        let obs = env.observation();
        let s = policy.act(env, &obs, rng)?;
        let value = match critic {
            Some(c) => c.value(&obs)?,
            None => 0.0,
        };
        let action = Action {
            alpha: s.action[..k].to_vec(),
            power_w: s.action[k..].to_vec(),
        };
        let out = env.step(&action)?;
        stats.record(env, &out);
        let done = out.done;
        traj.push(Transition {
            state: obs,
            pre_squash: s.pre_squash,
            noise: s.noise,
            action: s.action,
            reward: out.reward,
            done,
            next_state: env.observe(&out.next_state),
            log_prob: s.log_prob,
            value,
        })?;
        if done {
            break;
        }
    }
    Ok((traj, stats.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SystemConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn always_local_stores_zero_alpha() {
        let mut env = MecEnv::from_config(&SystemConfig { slots: 7, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (traj, stats) = collect(&mut env, Policy::AlwaysLocal, None, 100, &mut rng).unwrap();
        assert_eq!(traj.len(), 7);
        assert!(traj.steps.iter().all(|t| t.action[..2] == [0.0, 0.0]));
        assert!(traj.steps.last().unwrap().done);
        assert_eq!(stats.alpha, 0.0);
    }

    #[test]
    fn single_slot_episode() {
        let mut env = MecEnv::from_config(&SystemConfig { slots: 1, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (traj, _) = collect(&mut env, Policy::AlwaysOffload, None, 100, &mut rng).unwrap();
        assert_eq!(traj.len(), 1);
        assert!(traj.steps[0].done);
    }

    #[test]
    fn seeded_rollouts_replay() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut env = MecEnv::from_config(&SystemConfig { slots: 10, ..Default::default() }).unwrap();
            let actor = Actor::new(env.observation().len(), 8, &env.power_limits(), &mut rng).unwrap();
            collect(&mut env, Policy::Stochastic(&actor), None, 100, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
