//! Episodic multi-user offloading environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{SystemConfig, SystemParams};
use super::physics::{
    channel_gain, distance, local_cost, offload_cost, penalty, qos_blend, uplink_rate, Fading,
    Penalty,
};
use super::qos::sample_slot_qos;
use crate::error::{Error, Result};

/// Features per MLU in the observation vector.
pub const FEATURES_PER_MLU: usize = 7;
/// Gains are multiplied by this before entering the observation.
pub const GAIN_SCALE: f64 = 1e5;
/// Task sizes enter the observation in Mbit.
pub const BITS_SCALE: f64 = 1e-6;

pub fn observation_dim(num_mlus: usize) -> usize {
    FEATURES_PER_MLU * num_mlus + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub t: usize,
    pub prev_alpha: Vec<f64>,
    pub prev_power_w: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub hallucination: Vec<f64>,
    pub latency_s: Vec<f64>,
    pub task_bits: Vec<f64>,
    pub gain: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub alpha: Vec<f64>,
    pub power_w: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MluDiagnostics {
    pub alpha: f64,
    pub power_w: f64,
    pub task_bits: f64,
    pub gain: f64,
    pub rate_bps: f64,
    pub l_local: f64,
    pub l_off: f64,
    pub l_mec: f64,
    pub latency: f64,
    pub e_local: f64,
    pub e_off: f64,
    pub a_local: f64,
    pub h_local: f64,
    pub a_mec: f64,
    pub h_mec: f64,
    pub accuracy: f64,
    pub hallucination: f64,
    pub upload_capped: bool,
}

impl MluDiagnostics {
    pub fn energy(&self) -> f64 {
        self.e_local + self.e_off
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub t: usize,
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub mlus: Vec<MluDiagnostics>,
    pub penalty: Penalty,
}

impl StepOutcome {
    pub fn total_latency(&self) -> f64 {
        self.mlus.iter().map(|m| m.latency).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MecEnv {
    params: SystemParams,
    rng: ChaCha8Rng,
    positions: Vec<[f64; 2]>,
    state: EnvState,
}

impl MecEnv {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Ok(Self::new(cfg.resolve()?, cfg.seed))
    }

    /// Creates the environment and draws its first episode.
    pub fn new(params: SystemParams, seed: u64) -> Self {
        let k = params.num_mlus;
        let mut env = Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            positions: vec![[0.0; 2]; k],
            state: EnvState {
                t: 0,
                prev_alpha: vec![0.0; k],
                prev_power_w: vec![0.0; k],
                accuracy: vec![0.0; k],
                hallucination: vec![0.0; k],
                latency_s: vec![0.0; k],
                task_bits: vec![0.0; k],
                gain: vec![0.0; k],
            },
            params,
        };
        env.reset();
        env
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn num_mlus(&self) -> usize {
        self.params.num_mlus
    }

    pub fn power_limits(&self) -> Vec<f64> {
        self.params.devices.iter().map(|d| d.p_max_w).collect()
    }

    /// Places users, draws the first slot's tasks and channels.
    pub fn reset(&mut self) -> EnvState {
        let p = &self.params;
        for (k, dev) in p.devices.iter().enumerate() {
            self.positions[k] = match dev.position_m {
                Some(pos) => pos,
                None => {
                    let r = p.placement_radius_m * self.rng.random::<f64>().sqrt();
                    let theta = std::f64::consts::TAU * self.rng.random::<f64>();
                    [r * theta.cos(), r * theta.sin()]
                }
            };
        }
        let k = p.num_mlus;
        self.state = EnvState {
            t: 0,
            prev_alpha: vec![0.0; k],
            prev_power_w: vec![0.0; k],
            accuracy: vec![p.a_local; k],
            hallucination: vec![p.h_local; k],
            latency_s: vec![0.0; k],
            task_bits: vec![0.0; k],
            gain: vec![0.0; k],
        };
        self.draw_exogenous();
        self.state.clone()
    }

    fn draw_exogenous(&mut self) {
        let p = &self.params;
        let fading = if p.deterministic_channel {
            Fading::Deterministic
        } else {
            Fading::Rician
        };
        for k in 0..p.num_mlus {
            self.state.task_bits[k] = if p.task_bits_max > p.task_bits_min {
                self.rng.random_range(p.task_bits_min..p.task_bits_max)
            } else {
                p.task_bits_min
            };
            let d = distance(self.positions[k], [0.0, 0.0], p.mec_height_m);
            // A zero distance only occurs with zero antenna height at the origin.
            self.state.gain[k] = channel_gain(d.max(1e-3), p.ref_gain, p.rician_k, fading, &mut self.rng)
                .expect("positive distance");
        }
    }

    /// Flat, fixed-scale observation of a state.
    pub fn observe(&self, state: &EnvState) -> Vec<f64> {
        let p = &self.params;
        let mut obs = Vec::with_capacity(observation_dim(p.num_mlus));
        for k in 0..p.num_mlus {
            obs.extend([
                state.prev_alpha[k],
                state.prev_power_w[k] / p.devices[k].p_max_w,
                state.accuracy[k],
                state.hallucination[k],
                state.latency_s[k],
                state.task_bits[k] * BITS_SCALE,
                state.gain[k] * GAIN_SCALE,
            ]);
        }
        obs.push((p.slots - state.t) as f64 / p.slots as f64);
        obs
    }

    pub fn observation(&self) -> Vec<f64> {
        self.observe(&self.state)
    }

    fn checked_action(&self, action: &Action) -> Result<Action> {
        let k = self.params.num_mlus;
        if action.alpha.len() != k || action.power_w.len() != k {
            return Err(Error::shape(
                "MecEnv::step",
                &[k, k],
                &[action.alpha.len(), action.power_w.len()],
            ));
        }
        if action.alpha.iter().chain(&action.power_w).any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("action contains NaN".into()));
        }
        Ok(Action {
            alpha: action.alpha.iter().map(|a| a.clamp(0.0, 1.0)).collect(),
            power_w: action
                .power_w
                .iter()
                .zip(&self.params.devices)
                .map(|(p, d)| p.clamp(0.0, d.p_max_w))
                .collect(),
        })
    }

    /// Applies an action to the current slot and advances to the next one.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let action = self.checked_action(action)?;
        let p = &self.params;
        let k = p.num_mlus;
        let t = self.state.t;

        let mut mlus = Vec::with_capacity(k);
        for i in 0..k {
            let (a_local, h_local) = sample_slot_qos(p.a_local, p.h_local, p.concentration, &mut self.rng);
            let (a_mec, h_mec) = if p.sample_edge {
                sample_slot_qos(p.a_mec, p.h_mec, p.concentration, &mut self.rng)
            } else {
                (p.a_mec, p.h_mec)
            };
            let alpha = action.alpha[i];
            let power = action.power_w[i];
            let x = self.state.task_bits[i];
            let dev = &p.devices[i];
            let rate = uplink_rate(i, &action.power_w, &self.state.gain, p.bandwidth_hz, p.noise_w);
            let local = local_cost(alpha, x, dev.cpu_freq_hz, p.cycles_per_bit, p.energy_coeff);
            let off = offload_cost(
                alpha,
                x,
                rate,
                power,
                p.mec_cycles_per_bit,
                p.mec_freq_hz,
                p.slot_cap_s,
            );
            let (acc, hal) = qos_blend(alpha, a_local, h_local, a_mec, h_mec);
            mlus.push(MluDiagnostics {
                alpha,
                power_w: power,
                task_bits: x,
                gain: self.state.gain[i],
                rate_bps: rate,
                l_local: local.latency_s,
                l_off: off.upload_s,
                l_mec: off.mec_s,
                latency: local.latency_s.max(off.upload_s + off.mec_s),
                e_local: local.energy_j,
                e_off: off.energy_j,
                a_local,
                h_local,
                a_mec,
                h_mec,
                accuracy: acc,
                hallucination: hal,
                upload_capped: off.capped,
            });
        }

        let accs: Vec<f64> = mlus.iter().map(|m| m.accuracy).collect();
        let hals: Vec<f64> = mlus.iter().map(|m| m.hallucination).collect();
        let energy: Vec<f64> = mlus.iter().map(|m| m.energy()).collect();
        let budget: Vec<f64> = p.devices.iter().map(|d| d.e_max_j).collect();
        let pen = penalty(&accs, &hals, &energy, &budget, p.a_min, p.h_max);
        let total_latency: f64 = mlus.iter().map(|m| m.latency).sum();
        let reward = 1.0 / (total_latency + p.penalty_weight * pen.total());
        let done = t + 1 >= p.slots;

        self.state.t = t + 1;
        self.state.prev_alpha = action.alpha;
        self.state.prev_power_w = action.power_w;
        self.state.accuracy = accs;
        self.state.hallucination = hals;
        self.state.latency_s = mlus.iter().map(|m| m.latency).collect();
        self.draw_exogenous();

        Ok(StepOutcome {
            t,
            next_state: self.state.clone(),
            reward,
            done,
            mlus,
            penalty: pen,
        })
    }
}
