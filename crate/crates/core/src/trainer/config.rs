use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::SystemConfig;
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::world_model::WmConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    WmPpo,
    Ppo,
    AlwaysLocal,
    AlwaysOffload,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::WmPpo, Baseline::Ppo, Baseline::AlwaysLocal, Baseline::AlwaysOffload];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::WmPpo => "wm-ppo",
            Baseline::Ppo => "ppo",
            Baseline::AlwaysLocal => "always-local",
            Baseline::AlwaysOffload => "always-offload",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Baseline::WmPpo | Baseline::Ppo)
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown baseline {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub iterations: usize,
    /// Slots per episode; overrides `system.slots` when set.
    pub episode_length: Option<usize>,
    pub baseline: Baseline,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    /// Iterations between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: usize,
    pub system: SystemConfig,
    pub ppo: PpoConfig,
    pub wm: WmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            episode_length: None,
            baseline: Baseline::WmPpo,
            seeds: vec![0],
            eval_episodes: 100,
            checkpoint_interval: 0,
            system: SystemConfig::default(),
            ppo: PpoConfig::default(),
            wm: WmConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        if self.episode_length == Some(0) {
            return Err(Error::InvalidConfig("episode_length must be ≥ 1".into()));
        }
        self.system_config().resolve()?;
        self.ppo.validate()?;
        self.wm.validate()
    }

    /// System configuration with the episode-length override applied.
    pub fn system_config(&self) -> SystemConfig {
        let mut sys = self.system.clone();
        if let Some(t) = self.episode_length {
            sys.slots = t;
        }
        sys
    }

    /// Hex SHA-256 of the compact JSON serialization, with the iteration
    /// count zeroed so that extending a run keeps its identity.
    pub fn hash(&self) -> String {
        hash_json(&RunConfig { iterations: 0, ..self.clone() })
    }
}

/// Hex SHA-256 of the compact JSON serialization of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Independent random streams derived from one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Env = 2,
    Actions = 3,
    Shuffle = 4,
    WorldModel = 5,
    Imagination = 6,
    Eval = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// A 64-bit seed for components that own their generator (the environment).
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    stream_rng(seed, stream).next_u64()
}
