use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmConfig {
    pub n_h: usize,
    pub n_z: usize,
    /// Hidden width of the prior, encoder, and decoder networks.
    pub hidden: usize,
    pub lambda_r: f64,
    pub beta_kl: f64,
    /// Weight of the done-flag cross-entropy.
    pub lambda_done: f64,
    /// Weight of the model-based branch in the critic target.
    pub lambda_wm: f64,
    pub horizon: usize,
    /// Imagination loss coefficient.
    pub eta: f64,
    /// Share of batch states, ranked by uncertainty, used as imagination starts.
    pub start_fraction: f64,
    pub min_std: f64,
    pub lr: f64,
    /// Training sequence length; every sequence starts from a zero hidden state.
    pub seq_len: usize,
    /// Sequences per world-model minibatch.
    pub batch_sequences: usize,
    /// Passes over the replay buffer per iteration.
    pub epochs: usize,
    /// Most recent episodes kept for world-model training.
    pub replay_episodes: usize,
}

impl Default for WmConfig {
    fn default() -> Self {
        Self {
            n_h: 256,
            n_z: 32,
            hidden: 256,
            lambda_r: 1.0,
            beta_kl: 1.0,
            lambda_done: 1.0,
            lambda_wm: 0.5,
            horizon: 3,
            eta: 0.3,
            start_fraction: 0.25,
            min_std: 0.1,
            lr: 1e-3,
            seq_len: 4,
            batch_sequences: 25,
            epochs: 1,
            replay_episodes: 4,
        }
    }
}

impl WmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_z == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("world-model widths must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_wm) {
            return Err(Error::InvalidConfig(format!("lambda_wm {} outside [0, 1]", self.lambda_wm)));
        }
        if !(0.0..=1.0).contains(&self.start_fraction) {
            return Err(Error::InvalidConfig(format!(
                "start_fraction {} outside [0, 1]",
                self.start_fraction
            )));
        }
        if self.horizon == 0 || self.seq_len == 0 || self.batch_sequences == 0 || self.replay_episodes == 0 {
            return Err(Error::InvalidConfig(
                "horizon, seq_len, batch_sequences, and replay_episodes must be ≥ 1".into(),
            ));
        }
        for (name, v) in [
            ("lambda_r", self.lambda_r),
            ("beta_kl", self.beta_kl),
            ("lambda_done", self.lambda_done),
            ("eta", self.eta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be nonnegative")));
            }
        }
        if !(self.min_std > 0.0 && self.lr > 0.0) {
            return Err(Error::InvalidConfig("min_std and lr must be positive".into()));
        }
        Ok(())
    }
}
