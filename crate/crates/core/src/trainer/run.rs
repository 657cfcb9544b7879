//! One training run: rollout, world-model update, critic targets, actor update.

use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{stream_rng, stream_seed, Baseline, RunConfig, Stream};
use super::rollout::{collect, EpisodeStats, Policy};
use crate::env::{observation_dim, MecEnv};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig};
use crate::ppo::{gae, normalize, ppo_update, PpoAgent, PpoBatch, Trajectory, UpdateReport};
use crate::tensor::Tensor;
use crate::world_model::{boosted_targets, imagine, select_low_uncertainty, SeqBatch, WmLoss, WorldModel};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WmState {
    pub model: WorldModel,
    pub opt: Adam,
    /// Most recent episodes, oldest first.
    pub replay: VecDeque<Trajectory>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Rngs {
    actions: ChaCha8Rng,
    shuffle: ChaCha8Rng,
    world_model: ChaCha8Rng,
    imagination: ChaCha8Rng,
}

/// One row of the per-iteration training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub config_hash: String,
    pub seed: u64,
    pub baseline: Baseline,
    pub iteration: usize,
    pub reward_mean: f64,
    pub latency_mean: f64,
    pub accuracy_mean: f64,
    pub hallucination_mean: f64,
    pub energy_mean: f64,
    pub alpha_mean: f64,
    pub accuracy_violation_rate: f64,
    pub hallucination_violation_rate: f64,
    pub energy_violation_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub imagination_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub wm_loss: Option<f64>,
    pub wm_reconstruction: Option<f64>,
    pub wm_reward: Option<f64>,
    pub wm_kl: Option<f64>,
    /// Critic loss plus `λ_wm ·` world-model loss, reported only.
    pub critic_objective: f64,
    pub imagined_starts: usize,
}

/// All state of a learned-policy run; serializes to a bit-exact checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub version: u32,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub iteration: usize,
    /// Mean episode reward of every completed iteration.
    pub reward_history: Vec<f64>,
    pub env: MecEnv,
    pub agent: PpoAgent,
    pub wm: Option<WmState>,
    rngs: Rngs,
}

impl Trainer {
    pub fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if !config.baseline.is_learned() {
            return Err(Error::InvalidConfig(format!("{} has no trainable policy", config.baseline)));
        }
        let env = MecEnv::new(config.system_config().resolve()?, stream_seed(seed, Stream::Env));
        let obs_dim = observation_dim(env.num_mlus());
        let mut init = stream_rng(seed, Stream::Init);
        let agent = PpoAgent::new(obs_dim, &env.power_limits(), &config.ppo, &mut init)?;
        let wm = if config.baseline == Baseline::WmPpo {
            let model = WorldModel::new(obs_dim, agent.actor.action_dim(), &config.wm, &mut init)?;
            Some(WmState {
                opt: Adam::new(AdamConfig::with_lr(config.wm.lr), &model),
                model,
                replay: VecDeque::new(),
            })
        } else {
            None
        };
        Ok(Self {
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            config_hash: config.hash(),
            seed,
            iteration: 0,
            reward_history: Vec::new(),
            env,
            agent,
            wm,
            rngs: Rngs {
                actions: stream_rng(seed, Stream::Actions),
                shuffle: stream_rng(seed, Stream::Shuffle),
                world_model: stream_rng(seed, Stream::WorldModel),
                imagination: stream_rng(seed, Stream::Imagination),
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let t: Trainer = serde_json::from_reader(file)?;
        if t.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                t.version
            )));
        }
        if t.config.hash() != t.config_hash {
            return Err(Error::Checkpoint("config hash does not match the embedded config".into()));
        }
        Ok(t)
    }

    fn episode_length(&self) -> usize {
        self.env.params().slots
    }

    /// Collects one on-policy episode.
    pub fn collect(&mut self) -> Result<(Trajectory, EpisodeStats)> {
        let t = self.episode_length();
        collect(
            &mut self.env,
            Policy::Stochastic(&self.agent.actor),
            Some(&self.agent.critic),
            t,
            &mut self.rngs.actions,
        )
    }

    /// Collects an episode and trains on it, returning the log row.
    pub fn train_iteration(&mut self) -> Result<IterationMetrics> {
        let (traj, stats) = self.collect()?;
        self.train_on(traj, stats)
    }

    /// Steps 2 to 4 on an already collected episode.
    pub fn train_on(&mut self, traj: Trajectory, stats: EpisodeStats) -> Result<IterationMetrics> {
        let wm_loss = self.update_world_model(&traj)?;

        let states = traj.states()?;
        let next_states = traj.next_states()?;
        let rewards = traj.rewards();
        let dones = traj.dones();
        let values = self.agent.critic.values(&states)?;
        let next_values = self.agent.critic.values(&next_states)?;
        let gamma = self.config.ppo.gamma;

        let (advantages, targets) = match &self.wm {
            None => {
                let a = gae(&rewards, &values, &next_values, &dones, gamma, self.config.ppo.gae_lambda)?;
                (a.advantages, a.returns)
            }
            Some(wm) => {
                let pred = wm.model.predict_next(&states, &traj.actions()?)?;
                let pred_next_values = self.agent.critic.values(&pred.next_states)?;
                let y = boosted_targets(
                    &rewards,
                    &dones,
                    &next_values,
                    &pred.rewards,
                    &pred_next_values,
                    gamma,
                    self.config.wm.lambda_wm,
                )?;
                let adv = y.iter().zip(&values).map(|(y, v)| y - v).collect();
                (adv, y)
            }
        };
        let advantages = if self.config.ppo.normalize_advantages {
            normalize(&advantages)
        } else {
            advantages
        };

        let (aux, imagined_starts) = match &self.wm {
            Some(wm) if self.config.wm.eta > 0.0 => {
                let idx = select_low_uncertainty(&wm.model, &states, self.config.wm.start_fraction)?;
                let starts = states.select_rows(&idx);
                let im = imagine(
                    &wm.model,
                    &starts,
                    &self.agent.actor,
                    &self.agent.critic,
                    self.config.wm.horizon,
                    gamma,
                    &mut self.rngs.imagination,
                )?;
                let term = if self.config.ppo.normalize_advantages {
                    im.normalized_loss_term(self.config.wm.eta)
                } else {
                    im.loss_term(self.config.wm.eta)
                };
                (Some(term), idx.len())
            }
            _ => (None, 0),
        };

        let batch = PpoBatch::from_trajectory(&traj, advantages, targets)?;
        let rep = ppo_update(&mut self.agent, &batch, &self.config.ppo, aux.as_ref(), &mut self.rngs.shuffle)?;
        self.iteration += 1;
        self.reward_history.push(stats.reward);
        Ok(self.metrics(&stats, &rep, wm_loss, imagined_starts))
    }

    fn metrics(&self, s: &EpisodeStats, rep: &UpdateReport, wm: Option<WmLoss>, imagined_starts: usize) -> IterationMetrics {
        let wm_total = wm.map(|l| l.total);
        IterationMetrics {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            baseline: self.config.baseline,
            iteration: self.iteration,
            reward_mean: s.reward,
            latency_mean: s.latency,
            accuracy_mean: s.accuracy,
            hallucination_mean: s.hallucination,
            energy_mean: s.energy,
            alpha_mean: s.alpha,
            accuracy_violation_rate: s.accuracy_violation_rate,
            hallucination_violation_rate: s.hallucination_violation_rate,
            energy_violation_rate: s.energy_violation_rate,
            policy_loss: rep.policy_loss,
            value_loss: rep.value_loss,
            entropy: rep.entropy,
            imagination_loss: rep.auxiliary_loss,
            clip_fraction: rep.clip_fraction,
            approx_kl: rep.approx_kl,
            wm_loss: wm_total,
            wm_reconstruction: wm.map(|l| l.reconstruction),
            wm_reward: wm.map(|l| l.reward),
            wm_kl: wm.map(|l| l.kl),
            critic_objective: rep.value_loss + self.config.wm.lambda_wm * wm_total.unwrap_or(0.0),
            imagined_starts,
        }
    }

    /// Fits the world model to the replayed episodes.
    fn update_world_model(&mut self, traj: &Trajectory) -> Result<Option<WmLoss>> {
        let Some(wm) = self.wm.as_mut() else {
            return Ok(None);
        };
        let cfg = &self.config.wm;
        wm.replay.push_back(traj.clone());
        while wm.replay.len() > cfg.replay_episodes {
            wm.replay.pop_front();
        }
        let mut windows: Vec<(usize, usize)> = Vec::new();
        for (e, ep) in wm.replay.iter().enumerate() {
            let mut start = 0;
            while start + cfg.seq_len <= ep.len() {
                windows.push((e, start));
                start += cfg.seq_len;
            }
        }
        if windows.is_empty() {
            return Ok(None);
        }
        let rng = &mut self.rngs.world_model;
        let mut sum = WmLoss::default();
        let mut steps = 0usize;
        for _ in 0..cfg.epochs {
            windows.shuffle(rng);
            for chunk in windows.chunks(cfg.batch_sequences) {
                let batch = seq_batch(&wm.replay, chunk, cfg.seq_len)?;
                let noise = wm.model.draw_noise(chunk.len(), cfg.seq_len, rng);
                let (loss, grad) = wm.model.loss_grad(&batch, &noise, cfg)?;
                wm.opt.step(&mut wm.model, &grad);
                sum.total += loss.total;
                sum.reconstruction += loss.reconstruction;
                sum.reward += loss.reward;
                sum.done += loss.done;
                sum.kl += loss.kl;
                steps += 1;
            }
        }
        let k = steps.max(1) as f64;
        Ok(Some(WmLoss {
            total: sum.total / k,
            reconstruction: sum.reconstruction / k,
            reward: sum.reward / k,
            done: sum.done / k,
            kl: sum.kl / k,
        }))
    }
}

/// Stacks `len`-step windows `(episode, start)` into a sequence batch.
fn seq_batch(replay: &VecDeque<Trajectory>, windows: &[(usize, usize)], len: usize) -> Result<SeqBatch> {
    let b = windows.len();
    let first = &replay[windows[0].0].steps[0];
    let (od, ad) = (first.state.len(), first.action.len());
    let mut obs = Vec::with_capacity(len);
    let mut actions = Vec::with_capacity(len - 1);
    let mut rewards = Vec::with_capacity(len - 1);
    let mut dones = Vec::with_capacity(len - 1);
    for t in 0..len {
        let mut o = Tensor::zeros(&[b, od]);
        let mut a = Tensor::zeros(&[b, ad]);
        let mut r = vec![0.0; b];
        let mut d = vec![0.0; b];
        for (row, &(e, start)) in windows.iter().enumerate() {
            let step = &replay[e].steps[start + t];
            o.row_mut(row).copy_from_slice(&step.state);
            a.row_mut(row).copy_from_slice(&step.action);
            r[row] = step.reward;
            d[row] = if step.done { 1.0 } else { 0.0 };
        }
        obs.push(o);
        if t + 1 < len {
            actions.push(a);
            rewards.push(r);
            dones.push(d);
        }
    }
    Ok(SeqBatch { obs, actions, rewards, dones })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SystemConfig;
    use crate::ppo::PpoConfig;
    use crate::world_model::WmConfig;

    pub(crate) fn tiny(baseline: Baseline) -> RunConfig {
        RunConfig {
            iterations: 3,
            episode_length: Some(10),
            baseline,
            system: SystemConfig::default(),
            ppo: PpoConfig { hidden: 16, minibatch_size: 5, epochs: 2, ..Default::default() },
            wm: WmConfig { n_h: 8, n_z: 4, hidden: 16, seq_len: 3, batch_sequences: 4, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn iterations_count_and_state_change() {
        let mut t = Trainer::new(&tiny(Baseline::WmPpo), 0).unwrap();
        let before = t.agent.clone();
        let rows: Vec<_> = (0..3).map(|_| t.train_iteration().unwrap()).collect();
        assert_eq!(rows.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_ne!(t.agent, before);
        assert!(rows.iter().all(|r| r.wm_loss.is_some() && r.imagined_starts > 0));
    }

    #[test]
    fn static_baselines_are_not_trainable() {
        assert!(Trainer::new(&tiny(Baseline::AlwaysLocal), 0).is_err());
    }

    #[test]
    fn degenerate_knobs_match_vanilla() {
        let mut wm_cfg = tiny(Baseline::WmPpo);
        wm_cfg.wm.lambda_wm = 0.0;
        wm_cfg.wm.eta = 0.0;
        let mut ppo_cfg = tiny(Baseline::Ppo);
        ppo_cfg.ppo.gae_lambda = 0.0;
        let mut a = Trainer::new(&wm_cfg, 4).unwrap();
        let mut b = Trainer::new(&ppo_cfg, 4).unwrap();
        for _ in 0..3 {
            a.train_iteration().unwrap();
            b.train_iteration().unwrap();
        }
        assert_eq!(a.agent, b.agent);
    }
}
